// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "socialprobe/socialprobe.h"

#ifndef SOCIALPROBE_DATA_DIR
#define SOCIALPROBE_DATA_DIR "data"
#endif

TEST_SUITE("capi") {

TEST_CASE("version and error state") {
  CHECK(std::strlen(sp_version()) > 0);
  double out = 0.0;
  CHECK(sp_ade(nullptr, nullptr, 0, &out) == SP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sp_last_error()).find("sp_ade") != std::string::npos);
}

TEST_CASE("config handle lifecycle") {
  sp_config* cfg = nullptr;
  REQUIRE(sp_config_create(&cfg) == SP_OK);
  CHECK(sp_config_set(cfg, "model", "vain") == SP_OK);
  CHECK(sp_config_set(cfg, "protocol", "gates") == SP_OK);
  CHECK(sp_config_set(cfg, "seeds", "0..2") == SP_OK);
  CHECK(sp_config_set(cfg, "epochs", "3") == SP_OK);
  CHECK(sp_config_set(cfg, "colour", "red") == SP_ERR_CONFIG);
  CHECK(sp_config_set(cfg, "seeds", "x") == SP_ERR_CONFIG);
  CHECK(sp_config_set(cfg, "epochs", "three") == SP_ERR_CONFIG);
  CHECK(sp_config_set(nullptr, "model", "vain") == SP_ERR_INVALID_ARGUMENT);

  std::size_t needed = 0;
  REQUIRE(sp_config_to_json(cfg, nullptr, 0, &needed) == SP_OK);
  REQUIRE(needed > 1);
  std::string buf(needed, '\0');
  CHECK(sp_config_to_json(cfg, buf.data(), 4, &needed) == SP_ERR_INVALID_ARGUMENT);
  REQUIRE(sp_config_to_json(cfg, buf.data(), buf.size(), &needed) == SP_OK);
  CHECK(buf.find("\"gates\"") != std::string::npos);
  CHECK(buf.find("\"epochs\": 3") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "socialprobe_capi_cfg.json";
  std::ofstream(path) << buf.c_str();
  sp_config* loaded = nullptr;
  REQUIRE(sp_config_create(&loaded) == SP_OK);
  CHECK(sp_config_load_json(loaded, path.c_str()) == SP_OK);
  std::string buf2(needed, '\0');
  CHECK(sp_config_to_json(loaded, buf2.data(), buf2.size(), nullptr) == SP_OK);
  CHECK(buf2 == buf);
  CHECK(sp_config_load_json(loaded, "/nonexistent/cfg.json") == SP_ERR_IO);
  std::ofstream(path) << "{ not json";
  CHECK(sp_config_load_json(loaded, path.c_str()) == SP_ERR_PARSE);

  sp_config_destroy(loaded);
  sp_config_destroy(cfg);
}

TEST_CASE("scene handle") {
  sp_scene* scene = nullptr;
  REQUIRE(sp_scene_load(SOCIALPROBE_DATA_DIR "/eth.txt", &scene) == SP_OK);
  std::size_t peds = 0, rows = 0, windows = 0;
  CHECK(sp_scene_counts(scene, &peds, &rows, &windows) == SP_OK);
  CHECK(peds == 360);
  CHECK(rows == 5492);
  CHECK(windows == 364);
  sp_scene_destroy(scene);
  CHECK(sp_scene_load("/nonexistent/eth.txt", &scene) == SP_ERR_IO);
  CHECK(sp_scene_counts(nullptr, &peds, nullptr, nullptr) == SP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("math entry points") {
  const double pred[] = {0.0, 0.0, 3.0, 4.0};
  const double truth[] = {0.0, 0.0, 0.0, 0.0};
  double v = 0.0;
  CHECK(sp_ade(pred, truth, 2, &v) == SP_OK);
  CHECK(v == doctest::Approx(2.5));
  CHECK(sp_fde(pred, truth, 2, &v) == SP_OK);
  CHECK(v == doctest::Approx(5.0));
  CHECK(sp_ade(pred, truth, 0, &v) != SP_OK);
  CHECK(sp_gate_prob_nonzero(0.0, &v) == SP_OK);
  CHECK(v == doctest::Approx(0.76833752096446).epsilon(1e-13));
  CHECK(sp_gate_deterministic(2.5, &v) == SP_OK);
  CHECK(v == 1.0);
  CHECK(sp_gate_prob_nonzero(0.0, nullptr) == SP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("report on a missing directory fails cleanly") {
  CHECK(sp_report("/nonexistent/out") == SP_ERR_IO);
  CHECK(std::strlen(sp_last_error()) > 0);
}

}  // TEST_SUITE
