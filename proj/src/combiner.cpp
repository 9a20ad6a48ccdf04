#include "relclass/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "relclass/evalkit.hpp"

namespace relclass {

namespace {

std::size_t lattice_units(double step) {
  if (!(step > 0.0) || step > 1.0) throw Error("weight step must be in (0,1]");
  const double units = std::round(1.0 / step);
  if (std::abs(units * step - 1.0) > 1e-9) {
    throw Error("weight step " + format_double(step) + " does not divide 1");
  }
  return static_cast<std::size_t>(units);
}

}  // namespace

void CombinationWeights::validate() const {
  if (alpha.empty()) throw Error("empty weight vector");
  lattice_units(step);
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error("weight outside [0,1]: " + format_double(a));
    const double q = a / step;
    if (std::abs(q - std::round(q)) > 1e-9) {
      throw Error("weight " + format_double(a) + " is not a multiple of step " +
                  format_double(step));
    }
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("weights sum to " + format_double(sum) + ", not 1");
}

void ScoreTable::validate() const {
  if (models.empty()) throw Error("score table has no model columns");
  for (const auto& row : rows) {
    if (row.scores.size() != models.size()) throw Error("score row width mismatch");
    for (double s : row.scores) {
      if (!(s >= 0.0 && s <= 1.0)) throw Error("score outside [0,1]: " + format_double(s));
    }
  }
}

ScoreTable ScoreTable::for_slot(std::string_view slot) const {
  ScoreTable out;
  out.models = models;
  for (const auto& row : rows) {
    if (row.slot == slot) out.rows.push_back(row);
  }
  return out;
}

std::vector<std::string> ScoreTable::slots() const {
  std::set<std::string> seen;
  for (const auto& row : rows) seen.insert(row.slot);
  return {seen.begin(), seen.end()};
}

ScoreTable ScoreTable::merge(std::span<const ScoreTable> tables) {
  if (tables.empty()) throw Error("no score tables to merge");
  ScoreTable out = tables.front();
  for (std::size_t t = 1; t < tables.size(); ++t) {
    const auto& other = tables[t];
    if (other.rows.size() != out.rows.size()) {
      throw Error("instance-set mismatch: score tables have " +
                  std::to_string(out.rows.size()) + " and " +
                  std::to_string(other.rows.size()) + " rows");
    }
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      if (out.rows[i].slot != other.rows[i].slot || out.rows[i].gold != other.rows[i].gold) {
        throw Error("instance-set mismatch at row " + std::to_string(i + 1));
      }
      auto& dst = out.rows[i].scores;
      dst.insert(dst.end(), other.rows[i].scores.begin(), other.rows[i].scores.end());
    }
    out.models.insert(out.models.end(), other.models.begin(), other.models.end());
  }
  return out;
}

ScoreTable parse_score_table(std::string_view text, std::string_view source) {
  ScoreTable table;
  LineReader reader(text);
  std::string_view line;
  bool header = false;
  while (reader.next(line)) {
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (!header) {
      if (fields.size() < 3 || fields[0] != "slot" || fields[1] != "gold") {
        throw ParseError(source, reader.line_number(),
                         "expected header 'slot<TAB>gold<TAB>model...'");
      }
      for (std::size_t i = 2; i < fields.size(); ++i) table.models.emplace_back(fields[i]);
      header = true;
      continue;
    }
    if (fields.size() != table.models.size() + 2) {
      throw ParseError(source, reader.line_number(), "score row width mismatch");
    }
    ScoreRow row;
    row.slot = std::string(fields[0]);
    if (fields[1] != "0" && fields[1] != "1") {
      throw ParseError(source, reader.line_number(), "gold must be 0 or 1");
    }
    row.gold = fields[1] == "1";
    try {
      for (std::size_t i = 2; i < fields.size(); ++i) {
        double s = parse_double(fields[i]);
        if (!(s >= 0.0 && s <= 1.0)) throw Error("score outside [0,1]");
        row.scores.push_back(s);
      }
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
    table.rows.push_back(std::move(row));
  }
  if (!header) throw ParseError(source, 1, "missing header");
  return table;
}

std::string serialize_score_table(const ScoreTable& table) {
  std::string out = "slot\tgold";
  for (const auto& m : table.models) out += "\t" + m;
  out += "\n";
  for (const auto& row : table.rows) {
    out += row.slot;
    out += row.gold ? "\t1" : "\t0";
    for (double s : row.scores) out += "\t" + format_double(s);
    out += "\n";
  }
  return out;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  return parse_score_table(read_file(path), path.string());
}

ModelScore combine(std::span<const double> scores, const CombinationWeights& weights) {
  weights.validate();
  if (scores.size() != weights.alpha.size()) {
    throw Error("score count does not match weight count");
  }
  double q = 0.0;
  for (std::size_t m = 0; m < scores.size(); ++m) q += weights.alpha[m] * scores[m];
  return ModelScore(std::clamp(q, 0.0, 1.0));
}

std::vector<CombinationWeights> simplex_lattice(std::size_t n_models, double step) {
  if (n_models == 0) throw Error("lattice needs at least one model");
  const std::size_t units = lattice_units(step);
  std::vector<CombinationWeights> out;
  std::vector<std::size_t> counts(n_models, 0);
  // Depth-first with the first coordinate descending gives lexicographically
  // descending order.
  auto recurse = [&](auto&& self, std::size_t m, std::size_t remaining) -> void {
    if (m + 1 == n_models) {
      counts[m] = remaining;
      CombinationWeights w;
      w.step = step;
      for (auto c : counts) w.alpha.push_back(static_cast<double>(c) / static_cast<double>(units));
      out.push_back(std::move(w));
      return;
    }
    for (std::size_t c = remaining + 1; c-- > 0;) {
      counts[m] = c;
      self(self, m + 1, remaining - c);
    }
  };
  recurse(recurse, 0, units);
  return out;
}

double combined_f1(const ScoreTable& table, const CombinationWeights& weights,
                   double threshold) {
  SlotMetrics m;
  for (const auto& row : table.rows) {
    m.add(combine(row.scores, weights).value() >= threshold, row.gold);
  }
  return m.f1();
}

double column_f1(const ScoreTable& table, std::size_t column, double threshold) {
  SlotMetrics m;
  for (const auto& row : table.rows) m.add(row.scores.at(column) >= threshold, row.gold);
  return m.f1();
}

GridSearchResult grid_search(const ScoreTable& table, double step, double threshold) {
  table.validate();
  if (table.rows.empty()) throw Error("empty dev score table");
  auto lattice = simplex_lattice(table.models.size(), step);
  GridSearchResult best;
  best.lattice_size = lattice.size();
  bool have = false;
  for (auto& w : lattice) {
    const double f1 = combined_f1(table, w, threshold);
    if (!have || f1 > best.dev_f1) {
      best.weights = w;
      best.dev_f1 = f1;
      have = true;
    }
  }
  return best;
}

WeightHistogram weight_histogram(const std::vector<std::string>& models,
                                 const std::map<std::string, CombinationWeights>& per_slot) {
  WeightHistogram hist;
  for (const auto& m : models) hist[m];
  for (const auto& [slot, w] : per_slot) {
    if (w.alpha.size() != models.size()) {
      throw Error("weight vector for slot " + slot + " has wrong length");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
      const double units = std::round(w.alpha[i] / w.step);
      ++hist[models[i]][units / static_cast<double>(lattice_units(w.step))];
    }
  }
  return hist;
}

}  // namespace relclass
