#include "secure/secure.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>

#include "secure/error.hpp"
#include "secure/harness.hpp"
#include "secure/parser.hpp"
#include "secure/session.hpp"

struct secure_session {
  std::mutex mu;
  secure::Session session;

  explicit secure_session(secure::SessionConfig cfg) : session(std::move(cfg)) {}
};

namespace {

thread_local std::string last_error;

char* copy_out(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

secure_status fail(secure_status st, const std::string& msg) {
  last_error = msg;
  return st;
}

template <typename F>
secure_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return SECURE_OK;
  } catch (const secure::ParseError& e) {
    return fail(SECURE_ERR_PARSE, e.what());
  } catch (const secure::ConfigError& e) {
    return fail(SECURE_ERR_CONFIG, e.what());
  } catch (const secure::ProtocolError& e) {
    return fail(SECURE_ERR_PROTOCOL, e.what());
  } catch (const secure::ValidationError& e) {
    return fail(SECURE_ERR_VALIDATION, e.what());
  } catch (const secure::InconsistencyError& e) {
    return fail(SECURE_ERR_INCONSISTENT, e.what());
  } catch (const secure::CapacityError& e) {
    return fail(SECURE_ERR_CAPACITY, e.what());
  } catch (const secure::DivergenceError& e) {
    return fail(SECURE_ERR_DIVERGENCE, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SECURE_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SECURE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SECURE_ERR_INTERNAL, "unknown error");
  }
}

nlohmann::json symbols_json(const secure::RefForm& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : r.restrictor.symbols()) out.push_back(s.name);
  return out;
}

nlohmann::json refexp_json(const secure::RefForm& r) {
  return {{"logical_form", r.str()}, {"rendered", secure::render_refexp(r)}, {"symbols", symbols_json(r)}};
}

nlohmann::json parse_config(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

}  // namespace

extern "C" {

const char* secure_version(void) { return "1.0.0"; }

const char* secure_last_error(void) { return last_error.c_str(); }

const char* secure_status_name(secure_status status) {
  switch (status) {
    case SECURE_OK:
      return "ok";
    case SECURE_ERR_ARGUMENT:
      return "argument";
    case SECURE_ERR_PARSE:
      return "parse";
    case SECURE_ERR_CONFIG:
      return "config";
    case SECURE_ERR_PROTOCOL:
      return "protocol";
    case SECURE_ERR_VALIDATION:
      return "validation";
    case SECURE_ERR_INCONSISTENT:
      return "inconsistent";
    case SECURE_ERR_CAPACITY:
      return "capacity";
    case SECURE_ERR_DIVERGENCE:
      return "divergence";
    case SECURE_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

void secure_string_free(char* s) { std::free(s); }

secure_status secure_parse_refexp(const char* text, char** out_json) {
  if (!text || !out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out_json = copy_out(refexp_json(secure::parse_refexp(text)).dump()); });
}

secure_status secure_parse_instruction(const char* text, char** out_json) {
  if (!text || !out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto t = secure::parse_instruction(text);
    nlohmann::json j{{"direct", refexp_json(t.direct)},
                     {"relation", secure::relation_symbol(t.relation)},
                     {"indirect", refexp_json(t.indirect)},
                     {"rendered", secure::render_instruction(t)}};
    *out_json = copy_out(j.dump());
  });
}

secure_status secure_render_refexp(const char* text, char** out_text) {
  if (!text || !out_text) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string_view t(text);
    const auto start = t.find_first_not_of(" \t");
    const auto r = start != t.npos && t[start] == '<' ? secure::parse_refform(t) : secure::parse_refexp(t);
    *out_text = copy_out(secure::render_refexp(r));
  });
}

secure_status secure_experiment_run(const char* config_json, char** out_json) {
  if (!out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto cfg = secure::experiment_config_from_json(parse_config(config_json));
    const auto r = secure::run_experiment(cfg);
    nlohmann::json j = secure::experiment_summary(r);
    j["curves_csv"] = secure::curves_csv(r);
    j["transcripts_jsonl"] = secure::transcripts_jsonl(r);
    *out_json = copy_out(j.dump());
  });
}

secure_status secure_policy_train(const char* config_json, char** out_json) {
  if (!out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto cfg = secure::training_config_from_json(parse_config(config_json));
    const auto r = secure::train_policy(cfg);
    nlohmann::json j{{"theta", {r.params.theta[0], r.params.theta[1]}},
                     {"episode_rewards", r.episode_rewards},
                     {"training_csv", secure::training_csv(r)}};
    *out_json = copy_out(j.dump());
  });
}

secure_status secure_session_create(const char* config_json, secure_session** out) {
  if (!out) return fail(SECURE_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new secure_session(secure::session_config_from_json(parse_config(config_json))); });
}

void secure_session_destroy(secure_session* s) { delete s; }

secure_status secure_session_get_state(secure_session* s, char** out_json) {
  if (!s || !out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::lock_guard<std::mutex> lock(s->mu);
    *out_json = copy_out(s->session.state().dump());
  });
}

secure_status secure_session_request(secure_session* s, const char* method, const char* path, const char* body,
                                     int* http_status, char** out_json) {
  if (!s || !method || !path || !http_status || !out_json) return fail(SECURE_ERR_ARGUMENT, "null argument");
  secure_status st = SECURE_OK;
  const secure_status g = guarded([&] {
    std::lock_guard<std::mutex> lock(s->mu);
    const auto r = s->session.handle(method, path, body ? body : "");
    *http_status = r.status;
    *out_json = copy_out(r.body.dump());
    if (r.status != 200) {
      const std::string kind = r.body["error"].value("kind", "");
      last_error = r.body["error"].value("message", "");
      if (kind == "protocol")
        st = SECURE_ERR_PROTOCOL;
      else if (kind == "validation")
        st = SECURE_ERR_VALIDATION;
      else if (kind == "malformed" || kind == "not_found")
        st = SECURE_ERR_ARGUMENT;
      else
        st = SECURE_ERR_INTERNAL;
    }
  });
  return g != SECURE_OK ? g : st;
}

}  // extern "C"
