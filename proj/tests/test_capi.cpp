#include <doctest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "secure/secure.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  secure_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("parsing through the C interface") {
  CHECK(std::strlen(secure_version()) > 0);
  char* out = nullptr;
  REQUIRE(secure_parse_refexp("the two granny smiths", &out) == SECURE_OK);
  const json j = json::parse(take(out));
  CHECK(j["logical_form"] == "<_the_2_q x. grannysmith(x)>");
  CHECK(j["rendered"] == "the two granny smiths");
  CHECK(j["symbols"] == json{"grannysmith"});

  REQUIRE(secure_parse_instruction("move a cube behind the one cylinder", &out) == SECURE_OK);
  CHECK(json::parse(take(out))["relation"] == "behind");

  REQUIRE(secure_render_refexp("<_every_q x. red(x) & cylinder(x)>", &out) == SECURE_OK);
  CHECK(take(out) == "every red cylinder");
  REQUIRE(secure_render_refexp("the two red cylinders", &out) == SECURE_OK);
  CHECK(take(out) == "the two red cylinders");

  out = nullptr;
  CHECK(secure_parse_refexp("some cube", &out) == SECURE_ERR_PARSE);
  CHECK(out == nullptr);
  CHECK(std::string(secure_last_error()).find("some") != std::string::npos);
  CHECK(secure_parse_refexp(nullptr, &out) == SECURE_ERR_ARGUMENT);
  CHECK(std::string(secure_status_name(SECURE_ERR_PARSE)) == "parse");
}

TEST_CASE("configuration errors") {
  char* out = nullptr;
  CHECK(secure_experiment_run("{\"episodes\": 0}", &out) == SECURE_ERR_CONFIG);
  CHECK(secure_experiment_run("{oops", &out) == SECURE_ERR_ARGUMENT);
  secure_session* s = nullptr;
  CHECK(secure_session_create("{\"policy\": \"greedy\"}", &s) == SECURE_ERR_CONFIG);
  CHECK(s == nullptr);
}

TEST_CASE("experiment and training") {
  char* out = nullptr;
  REQUIRE(secure_experiment_run(R"({"episodes": 2, "runs": 1, "policies": ["secure", "correct"]})", &out) ==
          SECURE_OK);
  const json r = json::parse(take(out));
  CHECK(r["cells"].size() == 2);
  CHECK(r["curves_csv"].get<std::string>().size() > 0);
  CHECK(r["oracle"]["violations"] == 0);

  REQUIRE(secure_policy_train(R"({"episodes": 3})", &out) == SECURE_OK);
  const json t = json::parse(take(out));
  CHECK(t["theta"].size() == 2);
  CHECK(t["episode_rewards"].size() == 3);
}

TEST_CASE("sessions") {
  secure_session* s = nullptr;
  REQUIRE(secure_session_create(R"({"seed": 4})", &s) == SECURE_OK);
  char* out = nullptr;
  REQUIRE(secure_session_get_state(s, &out) == SECURE_OK);
  CHECK(json::parse(take(out))["turn"] == "awaiting_instruction");

  int status = 0;
  CHECK(secure_session_request(s, "POST", "/proceed", "{}", &status, &out) == SECURE_ERR_PROTOCOL);
  CHECK(status == 409);
  CHECK(json::parse(take(out))["error"]["kind"] == "protocol");

  CHECK(secure_session_request(s, "GET", "/nope", "", &status, &out) == SECURE_ERR_ARGUMENT);
  CHECK(status == 404);
  take(out);

  CHECK(secure_session_request(s, "GET", "/transcript", nullptr, &status, &out) == SECURE_OK);
  CHECK(status == 200);
  CHECK(json::parse(take(out))["tasks"].empty());
  secure_session_destroy(s);
  secure_session_destroy(nullptr);
}
