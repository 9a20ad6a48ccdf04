#include "relclass/relclass.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "relclass/combiner.hpp"
#include "relclass/evalkit.hpp"
#include "relclass/neural.hpp"
#include "relclass/runner.hpp"

struct rc_config {
  relclass::RunConfig config;
};

struct rc_report {
  relclass::RunReport report;
};

namespace {

thread_local std::string g_last_error;

rc_status fail(rc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, mapping exceptions to status codes.
template <typename Fn>
rc_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const relclass::ParseError& e) {
    return fail(RC_ERROR_PARSE, e.what());
  } catch (const relclass::Error& e) {
    return fail(RC_ERROR_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RC_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RC_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(RC_ERROR_INTERNAL, "unknown error");
  }
}

#define RC_REQUIRE(cond, what) \
  if (!(cond)) return fail(RC_ERROR_ARGUMENT, what)

std::vector<std::filesystem::path> paths(const char* const* items, size_t n) {
  std::vector<std::filesystem::path> out;
  for (size_t i = 0; i < n; ++i) {
    if (!items[i]) throw relclass::Error("null path in list");
    out.emplace_back(items[i]);
  }
  return out;
}

rc_status deliver(relclass::RunReport result, rc_report** report) {
  const bool ok = result.ok;
  std::string first = result.errors.empty() ? std::string() : result.errors.front();
  if (report) *report = new rc_report{std::move(result)};
  if (ok) return RC_OK;
  return fail(RC_ERROR_RUN, first);
}

}  // namespace

extern "C" {

const char* rc_version(void) { return "1.0.0"; }

const char* rc_last_error(void) { return g_last_error.c_str(); }

rc_status rc_config_new(rc_config** out) {
  RC_REQUIRE(out, "null output pointer");
  return guarded([&] {
    *out = new rc_config{};
    return RC_OK;
  });
}

void rc_config_free(rc_config* config) { delete config; }

rc_status rc_config_set(rc_config* config, const char* key, const char* value) {
  RC_REQUIRE(config && key && value, "null argument");
  return guarded([&] {
    config->config.set(key, value);
    return RC_OK;
  });
}

rc_status rc_config_load(rc_config* config, const char* path) {
  RC_REQUIRE(config && path, "null argument");
  return guarded([&] {
    config->config.load_file(path);
    return RC_OK;
  });
}

rc_status rc_config_get(const rc_config* config, const char* key, char* buf, size_t cap,
                        size_t* len) {
  RC_REQUIRE(config && key, "null argument");
  RC_REQUIRE(buf || cap == 0, "null buffer with nonzero capacity");
  return guarded([&] {
    if (!config->config.has(key)) return fail(RC_ERROR_ARGUMENT, std::string("unset key ") + key);
    const auto value = config->config.get(key);
    if (len) *len = value.size();
    if (cap > 0) {
      const size_t n = std::min(cap - 1, value.size());
      std::memcpy(buf, value.data(), n);
      buf[n] = '\0';
    }
    return RC_OK;
  });
}

int rc_report_ok(const rc_report* report) { return report && report->report.ok ? 1 : 0; }

size_t rc_report_error_count(const rc_report* report) {
  return report ? report->report.errors.size() : 0;
}

const char* rc_report_error(const rc_report* report, size_t index) {
  if (!report || index >= report->report.errors.size()) return nullptr;
  return report->report.errors[index].c_str();
}

size_t rc_report_warning_count(const rc_report* report) {
  return report ? report->report.warnings.size() : 0;
}

const char* rc_report_warning(const rc_report* report, size_t index) {
  if (!report || index >= report->report.warnings.size()) return nullptr;
  return report->report.warnings[index].c_str();
}

double rc_report_value(const rc_report* report) { return report ? report->report.value : 0.0; }

void rc_report_free(rc_report* report) { delete report; }

rc_status rc_gen_data(const rc_config* config, const char* kb_file, const char* template_file,
                      const char* out_dir, rc_report** report) {
  RC_REQUIRE(config && kb_file && template_file && out_dir, "null argument");
  return guarded([&] {
    return deliver(relclass::run_gen_data(config->config, kb_file, template_file, out_dir),
                   report);
  });
}

rc_status rc_train(const rc_config* config, const char* model, const char* data_dir,
                   const char* out_dir, rc_report** report) {
  RC_REQUIRE(config && model && data_dir && out_dir, "null argument");
  return guarded([&] {
    return deliver(relclass::run_train(config->config, model, data_dir, out_dir), report);
  });
}

rc_status rc_eval(const rc_config* config, const char* models_dir, const char* data_dir,
                  const char* out_dir, rc_report** report) {
  RC_REQUIRE(config && models_dir && data_dir && out_dir, "null argument");
  return guarded([&] {
    return deliver(relclass::run_eval(config->config, models_dir, data_dir, out_dir), report);
  });
}

rc_status rc_combine(const rc_config* config, const char* const* score_dirs,
                     size_t n_score_dirs, const char* out_dir, rc_report** report) {
  RC_REQUIRE(config && out_dir && (score_dirs || n_score_dirs == 0), "null argument");
  return guarded([&] {
    const auto dirs = paths(score_dirs, n_score_dirs);
    return deliver(relclass::run_combine(config->config, dirs, out_dir), report);
  });
}

rc_status rc_tune(const rc_config* config, const char* model, const char* data_dir,
                  const char* grid_file, const char* out_dir, rc_report** report) {
  RC_REQUIRE(config && model && data_dir && grid_file && out_dir, "null argument");
  return guarded([&] {
    return deliver(relclass::run_tune(config->config, model, data_dir, grid_file, out_dir),
                   report);
  });
}

rc_status rc_genre_matrix(const rc_config* config, const char* data_dir,
                          const char* const* models, size_t n_models, const char* out_dir,
                          rc_report** report) {
  RC_REQUIRE(config && data_dir && out_dir && (models || n_models == 0), "null argument");
  return guarded([&] {
    std::vector<std::string> names;
    for (size_t i = 0; i < n_models; ++i) {
      if (!models[i]) return fail(RC_ERROR_ARGUMENT, "null model name");
      names.emplace_back(models[i]);
    }
    return deliver(relclass::run_genre_matrix(config->config, data_dir, names, out_dir), report);
  });
}

rc_status rc_correlate(const rc_config* config, const char* const* report_files,
                       size_t n_report_files, const char* end_to_end_file, const char* out_dir,
                       rc_report** report) {
  RC_REQUIRE(config && end_to_end_file && out_dir && (report_files || n_report_files == 0),
             "null argument");
  return guarded([&] {
    const auto files = paths(report_files, n_report_files);
    return deliver(relclass::run_correlate(config->config, files, end_to_end_file, out_dir),
                   report);
  });
}

rc_status rc_pearson(const double* xs, const double* ys, size_t n, double* out) {
  RC_REQUIRE(out && ((xs && ys) || n == 0), "null argument");
  return guarded([&] {
    *out = relclass::pearson({xs, n}, {ys, n});
    return RC_OK;
  });
}

rc_status rc_kmax_pool(const double* values, size_t n, size_t k, double* out) {
  RC_REQUIRE((values || n == 0) && (out || k == 0), "null argument");
  return guarded([&] {
    const auto pooled = relclass::kmax_pool({values, n}, k);
    std::copy(pooled.begin(), pooled.end(), out);
    return RC_OK;
  });
}

rc_status rc_combine_scores(const double* scores, const double* weights, size_t n, double step,
                            double* out) {
  RC_REQUIRE(scores && weights && out, "null argument");
  return guarded([&] {
    relclass::CombinationWeights w{{weights, weights + n}, step};
    *out = relclass::combine({scores, n}, w).value();
    return RC_OK;
  });
}

rc_status rc_lattice_size(size_t n_models, double step, size_t* out) {
  RC_REQUIRE(out, "null argument");
  return guarded([&] {
    *out = relclass::simplex_lattice(n_models, step).size();
    return RC_OK;
  });
}

}  // extern "C"
