#include "demorec/demorec.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "graph.hpp"
#include "runner.hpp"
#include "synth.hpp"

struct demorec_log {
  demorec::InteractionLog log;
};

namespace {

thread_local std::string g_last_error;

char* heap_copy(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs fn, translating exceptions into status codes + the thread-local
// message. Success clears the message.
template <typename Fn>
demorec_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DEMOREC_OK;
  } catch (const demorec::Error& e) {
    g_last_error = e.what();
    return static_cast<demorec_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DEMOREC_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return DEMOREC_INTERNAL_ERROR;
  }
}

demorec_status invalid(const char* msg) {
  g_last_error = msg;
  return DEMOREC_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* demorec_version(void) { return demorec::kVersion; }

const char* demorec_last_error(void) { return g_last_error.c_str(); }

void demorec_string_free(char* s) { std::free(s); }

demorec_status demorec_log_load(const char* path, demorec_log** out) {
  if (!path || !out) return invalid("demorec_log_load: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new demorec_log{demorec::load_interactions(path)};
    *out = handle;
  });
}

demorec_status demorec_log_synthetic(int64_t users, int64_t items,
                                     int64_t blocks, double p_in, double p_out,
                                     uint64_t seed, demorec_log** out) {
  if (!out) return invalid("demorec_log_synthetic: null output");
  *out = nullptr;
  return guarded([&] {
    demorec::SyntheticConfig sc;
    sc.n_users = static_cast<demorec::Index>(users);
    sc.n_items = static_cast<demorec::Index>(items);
    sc.blocks = static_cast<demorec::Index>(blocks);
    sc.p_in = p_in;
    sc.p_out = p_out;
    sc.seed = seed;
    auto* handle = new demorec_log{demorec::synth_block_log(sc)};
    *out = handle;
  });
}

demorec_status demorec_log_kcore(const demorec_log* log, int64_t k,
                                 demorec_log** out) {
  if (!log || !out) return invalid("demorec_log_kcore: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new demorec_log{
        demorec::k_core_filter(log->log, static_cast<demorec::Index>(k))};
    *out = handle;
  });
}

demorec_status demorec_log_stats_json(const demorec_log* log, char** out_json) {
  if (!log || !out_json) return invalid("demorec_log_stats_json: null argument");
  *out_json = nullptr;
  return guarded([&] {
    demorec::BipartiteGraph g = demorec::BipartiteGraph::from_log(log->log);
    std::string json = demorec::stats_json(demorec::stats(g));
    *out_json = heap_copy(json);
    demorec::require(*out_json != nullptr, demorec::Status::InternalError,
                     "out of memory");
  });
}

void demorec_log_free(demorec_log* log) { delete log; }

demorec_status demorec_run(const char* subcommand, const char* config_text,
                           char** out_summary) {
  if (!subcommand) return invalid("demorec_run: null subcommand");
  if (out_summary) *out_summary = nullptr;
  demorec::RunResult result;
  demorec_status st = guarded([&] {
    demorec::ExperimentConfig cfg =
        demorec::parse_config_text(config_text ? config_text : "");
    result = demorec::run_subcommand(subcommand, cfg);
  });
  if (st != DEMOREC_OK) return st;
  if (out_summary) *out_summary = heap_copy(result.summary);
  if (result.status != 0) {
    g_last_error = result.summary;
    return static_cast<demorec_status>(result.status);
  }
  return DEMOREC_OK;
}

}  // extern "C"
