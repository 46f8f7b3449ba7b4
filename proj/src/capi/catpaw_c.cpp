#include "catpaw.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "catpaw/error.hpp"
#include "catpaw/service.hpp"

struct catpaw_engine {
  std::unique_ptr<catpaw::Engine> impl;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_field;

catpaw_status to_status(catpaw::ErrorCode c) {
  using catpaw::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return CATPAW_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return CATPAW_ERR_IO;
    case ErrorCode::Parse: return CATPAW_ERR_PARSE;
    case ErrorCode::Validation: return CATPAW_ERR_VALIDATION;
    case ErrorCode::UnknownId: return CATPAW_ERR_UNKNOWN_ID;
    case ErrorCode::Constraint: return CATPAW_ERR_CONSTRAINT;
    case ErrorCode::MissingEvidence: return CATPAW_ERR_MISSING_EVIDENCE;
    case ErrorCode::EmptyMatrix: return CATPAW_ERR_EMPTY_MATRIX;
    case ErrorCode::GenerationFailure: return CATPAW_ERR_GENERATION_FAILURE;
    case ErrorCode::Exhausted: return CATPAW_ERR_EXHAUSTED;
    case ErrorCode::Coverage: return CATPAW_ERR_COVERAGE;
    case ErrorCode::UndefinedCorrelation: return CATPAW_ERR_UNDEFINED_CORRELATION;
  }
  return CATPAW_ERR_INTERNAL;
}

catpaw_status fail(catpaw_status s, std::string message, std::string field) {
  g_message = std::move(message);
  g_field = std::move(field);
  return s;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

// Runs `f`, translating exceptions into a status and the thread's last error.
template <class F>
catpaw_status guard(F&& f) {
  g_message.clear();
  g_field.clear();
  try {
    f();
    return CATPAW_OK;
  } catch (const catpaw::Error& e) {
    return fail(to_status(e.code()), e.what(), e.field());
  } catch (const std::bad_alloc&) {
    return fail(CATPAW_ERR_INTERNAL, "out of memory", "");
  } catch (const std::exception& e) {
    return fail(CATPAW_ERR_INTERNAL, e.what(), "");
  } catch (...) {
    return fail(CATPAW_ERR_INTERNAL, "unknown failure", "");
  }
}

catpaw_status null_arg(const char* name) {
  return fail(CATPAW_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL", name);
}

#define CATPAW_REQUIRE(p)          \
  do {                             \
    if (!(p)) return null_arg(#p); \
  } while (0)

}  // namespace

extern "C" {

const char* catpaw_version(void) { return "0.1.0"; }

const char* catpaw_status_name(catpaw_status s) {
  switch (s) {
    case CATPAW_OK: return "ok";
    case CATPAW_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CATPAW_ERR_IO: return "io";
    case CATPAW_ERR_PARSE: return "parse";
    case CATPAW_ERR_VALIDATION: return "validation";
    case CATPAW_ERR_UNKNOWN_ID: return "unknown_id";
    case CATPAW_ERR_CONSTRAINT: return "constraint";
    case CATPAW_ERR_MISSING_EVIDENCE: return "missing_evidence";
    case CATPAW_ERR_EMPTY_MATRIX: return "empty_matrix";
    case CATPAW_ERR_GENERATION_FAILURE: return "generation_failure";
    case CATPAW_ERR_EXHAUSTED: return "exhausted";
    case CATPAW_ERR_COVERAGE: return "coverage";
    case CATPAW_ERR_UNDEFINED_CORRELATION: return "undefined_correlation";
    case CATPAW_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

int catpaw_http_status(catpaw_status s) {
  switch (s) {
    case CATPAW_OK: return 200;
    case CATPAW_ERR_INVALID_ARGUMENT:
    case CATPAW_ERR_PARSE:
    case CATPAW_ERR_VALIDATION: return 400;
    case CATPAW_ERR_UNKNOWN_ID: return 404;
    case CATPAW_ERR_CONSTRAINT:
    case CATPAW_ERR_EXHAUSTED: return 409;
    case CATPAW_ERR_MISSING_EVIDENCE:
    case CATPAW_ERR_EMPTY_MATRIX:
    case CATPAW_ERR_COVERAGE:
    case CATPAW_ERR_UNDEFINED_CORRELATION: return 422;
    default: return 500;
  }
}

const char* catpaw_last_error(void) { return g_message.c_str(); }
const char* catpaw_last_error_field(void) { return g_field.c_str(); }

void catpaw_string_free(char* s) { std::free(s); }

catpaw_status catpaw_engine_open(const char* data_dir, const char* config_path,
                                 const char* trials_path, catpaw_engine** out) {
  CATPAW_REQUIRE(data_dir);
  CATPAW_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    catpaw::EngineOptions opt;
    opt.data_dir = data_dir;
    if (config_path) opt.config = config_path;
    if (trials_path) opt.trials = trials_path;
    auto e = std::make_unique<catpaw_engine>();
    e->impl = std::make_unique<catpaw::Engine>(opt);
    *out = e.release();
  });
}

void catpaw_engine_close(catpaw_engine* engine) { delete engine; }

catpaw_status catpaw_config(const catpaw_engine* e, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(catpaw::format_config(e->impl->config())); });
}

catpaw_status catpaw_colors(const catpaw_engine* e, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->colors_json()); });
}

catpaw_status catpaw_shapes(const catpaw_engine* e, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->shapes_json()); });
}

catpaw_status catpaw_matrix(const catpaw_engine* e, const char* axis,
                            const char* bin, const char* format, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(axis);
  CATPAW_REQUIRE(bin);
  CATPAW_REQUIRE(out);
  return guard([&] {
    const std::string f = format ? format : "json";
    if (f == "json") *out = dup(e->impl->matrix_json(axis, bin));
    else if (f == "tsv") *out = dup(e->impl->matrix_table(axis, bin));
    else throw catpaw::Error(catpaw::ErrorCode::InvalidArgument, "format must be json or tsv", "format");
  });
}

catpaw_status catpaw_auto_encoding(const catpaw_engine* e, int n, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->auto_encoding_json(n)); });
}

catpaw_status catpaw_generate(const catpaw_engine* e, const char* request, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->generate(request)); });
}

catpaw_status catpaw_swap(const catpaw_engine* e, const char* request, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->swap(request)); });
}

catpaw_status catpaw_preview(const catpaw_engine* e, const char* request, char** out_svg) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out_svg);
  return guard([&] { *out_svg = dup(e->impl->preview_svg(request)); });
}

catpaw_status catpaw_plan(const catpaw_engine* e, const char* experiment, uint64_t seed,
                          const char* out_dir, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(experiment);
  CATPAW_REQUIRE(out);
  return guard([&] {
    if (out_dir) e->impl->render_plan(experiment, seed, out_dir);
    *out = dup(e->impl->plan(experiment, seed));
  });
}

catpaw_status catpaw_ingest(const catpaw_engine* e, const char* trials_path, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(trials_path);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->ingest(trials_path)); });
}

catpaw_status catpaw_validate(const catpaw_engine* e, const char* request, char** out,
                              char** out_svg) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] {
    std::string svg;
    const auto text = e->impl->validate(request, out_svg ? &svg : nullptr);
    char* a = dup(text);
    if (out_svg) {
      try {
        *out_svg = dup(svg);
      } catch (...) {
        std::free(a);
        throw;
      }
    }
    *out = a;
  });
}

catpaw_status catpaw_baseline(const catpaw_engine* e, const char* request, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->baseline(request)); });
}

catpaw_status catpaw_synth_trials(const catpaw_engine* e, const char* request, char** out) {
  CATPAW_REQUIRE(e);
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(e->impl->synth_trials(request)); });
}

catpaw_status catpaw_derive_pool(const char* request, char** out) {
  CATPAW_REQUIRE(request);
  CATPAW_REQUIRE(out);
  return guard([&] { *out = dup(catpaw::derive_pool_file(request)); });
}

}  // extern "C"
