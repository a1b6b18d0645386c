// secure_cli: grammar checks, SARSA training, experiments and the teaching
// session server. Talks to the library through its C interface only.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "secure/secure.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  secure_status status;
  std::string message;
};

std::string take(char* s) {
  std::string out = s ? s : "";
  secure_string_free(s);
  return out;
}

void check(secure_status st) {
  if (st != SECURE_OK) throw Failure{st, secure_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// --config file, then --set key=value overrides. Values are JSON when they
// parse as JSON and strings otherwise.
json load_config(const std::string& file, const std::vector<std::string>& overrides) {
  json cfg = file.empty() ? json::object() : json::parse(read_file(file));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    cfg[key] = v.is_discarded() ? json(value) : v;
  }
  return cfg;
}

int cmd_parse(const std::vector<std::string>& texts, bool instruction) {
  std::vector<std::string> inputs = texts;
  if (inputs.empty())
    for (std::string line; std::getline(std::cin, line);)
      if (!line.empty()) inputs.push_back(line);
  int bad = 0;
  for (const auto& t : inputs) {
    char* out = nullptr;
    const secure_status st = instruction ? secure_parse_instruction(t.c_str(), &out) : secure_parse_refexp(t.c_str(), &out);
    if (st == SECURE_OK) {
      json j = json::parse(take(out));
      j["input"] = t;
      std::cout << j.dump() << '\n';
    } else {
      ++bad;
      std::cout << json{{"input", t}, {"error", secure_status_name(st)}, {"message", secure_last_error()}}.dump() << '\n';
    }
  }
  return bad == 0 ? 0 : 1;
}

void print_summary(const json& r) {
  std::printf("%-8s %4s %9s %9s %7s %7s\n", "policy", "run", "cR", "cC", "mF1", "solved");
  for (const auto& c : r["cells"])
    std::printf("%-8s %4d %9.3f %9.3f %7.3f %7d\n", c["policy"].get<std::string>().c_str(), c["run"].get<int>(),
                c["cR"].get<double>(), c["cC"].get<double>(), c["mF1"].get<double>(), c["solved"].get<int>());
  std::printf("\nfinal episode, mean [95%% CI] over runs\n");
  for (auto it = r["final"].begin(); it != r["final"].end(); ++it) {
    const auto& f = it.value();
    std::printf("%-8s cR %8.3f [%8.3f, %8.3f]  mF1 %.3f [%.3f, %.3f]\n", it.key().c_str(),
                f["cR"]["mean"].get<double>(), f["cR"]["lo"].get<double>(), f["cR"]["hi"].get<double>(),
                f["mF1"]["mean"].get<double>(), f["mF1"]["lo"].get<double>(), f["mF1"]["hi"].get<double>());
  }
  std::printf("oracle formulas %zu, violations %zu, %.1f s\n", r["oracle"]["formulas"].get<std::size_t>(),
              r["oracle"]["violations"].get<std::size_t>(), r["seconds"].get<double>());
}

int cmd_experiment(json cfg, const std::string& params_file, const std::string& out_dir, bool compare) {
  if (!params_file.empty()) {
    const json p = json::parse(read_file(params_file));
    cfg["theta"] = p.at("theta");
  }
  if (compare && !cfg.contains("policies")) cfg["policies"] = {"secure", "simple", "correct"};
  char* out = nullptr;
  check(secure_experiment_run(cfg.dump().c_str(), &out));
  json r = json::parse(take(out));
  const fs::path dir(out_dir);
  write_file(dir / "curves.csv", r["curves_csv"].get<std::string>());
  write_file(dir / "transcripts.jsonl", r["transcripts_jsonl"].get<std::string>());
  r.erase("curves_csv");
  r.erase("transcripts_jsonl");
  write_file(dir / "summary.json", r.dump(2) + "\n");
  print_summary(r);
  if (compare) {
    std::printf("\none-sided sign tests on per-episode reward\n");
    for (const auto& t : r["sign_tests"])
      std::printf("%-8s > %-8s  +%zu -%zu  p = %.4g\n", t["better"].get<std::string>().c_str(),
                  t["worse"].get<std::string>().c_str(), t["positive"].get<std::size_t>(),
                  t["negative"].get<std::size_t>(), t["p_value"].get<double>());
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_train(const json& cfg, const std::string& params_out, const std::string& curve_out) {
  char* out = nullptr;
  check(secure_policy_train(cfg.dump().c_str(), &out));
  const json r = json::parse(take(out));
  write_file(params_out, json{{"theta", r["theta"]}}.dump(2) + "\n");
  if (!curve_out.empty()) write_file(curve_out, r["training_csv"].get<std::string>());
  std::printf("theta = [%.6g, %.6g] after %zu episodes\n", r["theta"][0].get<double>(), r["theta"][1].get<double>(),
              r["episode_rewards"].size());
  std::printf("wrote %s\n", params_out.c_str());
  return 0;
}

int cmd_serve(const json& cfg, const std::string& host, int port) {
  secure_session* raw = nullptr;
  check(secure_session_create(cfg.dump().c_str(), &raw));
  std::unique_ptr<secure_session, decltype(&secure_session_destroy)> session(raw, secure_session_destroy);

  httplib::Server server;
  auto relay = [&](const httplib::Request& req, httplib::Response& res) {
    int status = 500;
    char* out = nullptr;
    secure_session_request(session.get(), req.method.c_str(), req.path.c_str(), req.body.c_str(), &status, &out);
    res.status = status;
    res.set_content(out ? take(out) : json{{"error", {{"kind", "engine"}, {"message", secure_last_error()}}}}.dump(),
                    "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  for (const char* path : {"/state", "/transcript"}) server.Get(path, relay);
  for (const char* path : {"/instruction", "/answer", "/correction", "/proceed", "/scene"}) server.Post(path, relay);

  std::fprintf(stderr, "session protocol secure.session/1 on http://%s:%d\n", host.c_str(), port);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive task learning with quantified referring expressions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(secure_version()));

  std::string config_file, params_file, out_dir = "results", params_out = "theta.json", curve_out, host = "127.0.0.1";
  std::vector<std::string> overrides, texts;
  bool instruction = false;
  int port = 8080;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override a configuration key (key=value)");
  };

  auto* parse = app.add_subcommand("parse", "parse referring expressions (or instructions) and print logical forms");
  parse->add_option("text", texts, "inputs; read from stdin, one per line, when absent");
  parse->add_flag("-i,--instruction", instruction, "inputs are task instructions");

  auto* train = app.add_subcommand("train", "optimise the policy parameters with SARSA");
  add_config(train);
  train->add_option("-o,--params-out", params_out, "where to write the learned theta");
  train->add_option("--curve", curve_out, "training curve CSV (step, reward, theta1, theta2)");

  auto* eval = app.add_subcommand("eval", "run an experiment and write metrics, curves and transcripts");
  add_config(eval);
  eval->add_option("-p,--params", params_file, "theta checkpoint from train")->check(CLI::ExistingFile);
  eval->add_option("-o,--out", out_dir, "output directory");

  auto* compare = app.add_subcommand("compare", "compare policies on a shared task sequence");
  add_config(compare);
  compare->add_option("-p,--params", params_file, "theta checkpoint from train")->check(CLI::ExistingFile);
  compare->add_option("-o,--out", out_dir, "output directory");

  auto* serve = app.add_subcommand("serve", "serve a teaching session over HTTP");
  add_config(serve);
  serve->add_option("--host", host, "address to bind");
  serve->add_option("--port", port, "port to bind");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse->parsed()) return cmd_parse(texts, instruction);
    const json cfg = load_config(config_file, overrides);
    if (train->parsed()) return cmd_train(cfg, params_out, curve_out);
    if (eval->parsed()) return cmd_experiment(cfg, params_file, out_dir, false);
    if (compare->parsed()) return cmd_experiment(cfg, params_file, out_dir, true);
    if (serve->parsed()) return cmd_serve(cfg, host, port);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", secure_status_name(f.status), f.message.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
