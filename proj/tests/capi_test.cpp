#include <doctest.h>

#include <string>

#include <json.hpp>

#include "demorec/demorec.h"

#include "common.hpp"
#include "test_util.hpp"

using testutil::TempDir;
using testutil::write_text;

TEST_SUITE("capi") {

TEST_CASE("status codes mirror the library's error enum") {
  using demorec::Status;
  CHECK(DEMOREC_OK == static_cast<int>(Status::Ok));
  CHECK(DEMOREC_INVALID_ARGUMENT == static_cast<int>(Status::InvalidArgument));
  CHECK(DEMOREC_SHAPE_MISMATCH == static_cast<int>(Status::ShapeMismatch));
  CHECK(DEMOREC_PARSE_ERROR == static_cast<int>(Status::ParseError));
  CHECK(DEMOREC_IO_ERROR == static_cast<int>(Status::IoError));
  CHECK(DEMOREC_NOT_FINITE == static_cast<int>(Status::NotFinite));
  CHECK(DEMOREC_EMPTY_GRAPH == static_cast<int>(Status::EmptyGraph));
  CHECK(DEMOREC_INTERNAL_ERROR == static_cast<int>(Status::InternalError));
}

TEST_CASE("the reported version matches the library constant") {
  CHECK(std::string(demorec_version()) == demorec::kVersion);
}

TEST_CASE("loading a log and asking for stats round-trips through C") {
  TempDir td;
  std::string path = td.file("small.tsv");
  write_text(path, "a i1\na i2\nb i1\n");

  demorec_log* log = nullptr;
  REQUIRE(demorec_log_load(path.c_str(), &log) == DEMOREC_OK);
  REQUIRE(log != nullptr);
  CHECK(std::string(demorec_last_error()).empty());

  char* json = nullptr;
  REQUIRE(demorec_log_stats_json(log, &json) == DEMOREC_OK);
  REQUIRE(json != nullptr);
  auto stats = nlohmann::json::parse(json);
  CHECK(stats["users"].get<int>() == 2);
  CHECK(stats["items"].get<int>() == 2);
  CHECK(stats["edges"].get<int>() == 3);
  CHECK(stats["density_pct"].get<double>() == doctest::Approx(75.0));
  demorec_string_free(json);
  demorec_log_free(log);
}

TEST_CASE("a missing file surfaces as an io error with a message") {
  demorec_log* log = nullptr;
  CHECK(demorec_log_load("/no/such/file.tsv", &log) == DEMOREC_IO_ERROR);
  CHECK(log == nullptr);
  CHECK_FALSE(std::string(demorec_last_error()).empty());
}

TEST_CASE("null arguments are rejected, not dereferenced") {
  demorec_log* log = nullptr;
  CHECK(demorec_log_load(nullptr, &log) == DEMOREC_INVALID_ARGUMENT);
  CHECK(demorec_log_load("x", nullptr) == DEMOREC_INVALID_ARGUMENT);
  CHECK(demorec_log_stats_json(nullptr, nullptr) == DEMOREC_INVALID_ARGUMENT);
  CHECK(demorec_log_kcore(nullptr, 2, &log) == DEMOREC_INVALID_ARGUMENT);
  CHECK(demorec_log_synthetic(4, 4, 1, 0.5, 0.1, 1, nullptr) ==
        DEMOREC_INVALID_ARGUMENT);
  CHECK(demorec_run(nullptr, "", nullptr) == DEMOREC_INVALID_ARGUMENT);
  demorec_string_free(nullptr);  // must be a safe no-op
  demorec_log_free(nullptr);
}

TEST_CASE("synthetic generation and coring work through the C boundary") {
  demorec_log* log = nullptr;
  REQUIRE(demorec_log_synthetic(20, 30, 2, 0.4, 0.05, 7, &log) == DEMOREC_OK);
  REQUIRE(log != nullptr);

  demorec_log* cored = nullptr;
  REQUIRE(demorec_log_kcore(log, 1, &cored) == DEMOREC_OK);
  REQUIRE(cored != nullptr);
  demorec_log_free(cored);

  demorec_log* empty = nullptr;
  CHECK(demorec_log_kcore(log, 100, &empty) == DEMOREC_EMPTY_GRAPH);
  CHECK(empty == nullptr);
  CHECK_FALSE(std::string(demorec_last_error()).empty());
  demorec_log_free(log);
}

TEST_CASE("experiment runs report success and failures through one entry point") {
  TempDir td;
  std::string ok_cfg =
      "format=synth\nout=" + td.file("capi_run") +
      "\nk_core=1\nsynth_users=12\nsynth_items=14\nsynth_blocks=2\n"
      "synth_p_in=0.4\nsynth_p_out=0.05\ndim=4\nepochs_rec=4\nk=3\nseeds=1024\n";
  char* summary = nullptr;
  REQUIRE(demorec_run("baseline", ok_cfg.c_str(), &summary) == DEMOREC_OK);
  REQUIRE(summary != nullptr);
  CHECK(std::string(summary).find("baseline") == 0);
  CHECK(std::string(demorec_last_error()).empty());
  demorec_string_free(summary);

  CHECK(demorec_run("condensate", ok_cfg.c_str(), nullptr) ==
        DEMOREC_INVALID_ARGUMENT);
  CHECK(std::string(demorec_last_error()).find("unknown subcommand") !=
        std::string::npos);

  CHECK(demorec_run("baseline", "bogus=1\n", nullptr) ==
        DEMOREC_INVALID_ARGUMENT);
  CHECK(std::string(demorec_last_error()) == "config: unknown key 'bogus'");

  std::string starved = ok_cfg + "k_core=41\n";
  CHECK(demorec_run("baseline", starved.c_str(), nullptr) ==
        DEMOREC_EMPTY_GRAPH);
  CHECK(std::string(demorec_last_error()).find("error:") == 0);
}

}  // TEST_SUITE
