#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "wsmc/material_io.hpp"

using wsmc::ErrorKind;

namespace {

ErrorKind load_error(std::vector<unsigned char> bytes) {
  try {
    wsmc::deserialize_material(bytes);
  } catch (const wsmc::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "corrupt stream accepted";
  return ErrorKind::state;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string("wsmc_") + name + std::to_string(::getpid()));
}

}  // namespace

TEST(Wmcx, FileSizeOfFullScaleMaterial) {
  EXPECT_EQ(wsmc::wmcx_file_size(250, 10000, 5), 16u + 12u + 60'000'000u + 1000u);
}

TEST(Wmcx, HeaderLayout) {
  const auto m = wsmc::generate_material(77, 2, 4, 1);
  const auto bytes = wsmc::serialize_material(m, 77);
  ASSERT_EQ(bytes.size(), wsmc::wmcx_file_size(2, 4, 1));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "WMCX");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 77);
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[20], 4);
  EXPECT_EQ(bytes[24], 1);
}

TEST(Wmcx, RoundTripIsBitwise) {
  const auto m = wsmc::generate_material(5, 7, 300, 5);
  const auto loaded = wsmc::deserialize_material(wsmc::serialize_material(m, 5));
  EXPECT_EQ(loaded.seed, 5u);
  EXPECT_TRUE(loaded.material == m);
}

TEST(Wmcx, FileRoundTrip) {
  const auto path = temp_path("rt");
  const auto m = wsmc::generate_material(3, 4, 100, 2);
  wsmc::save_material(path, m, 3);
  EXPECT_EQ(std::filesystem::file_size(path), wsmc::wmcx_file_size(4, 100, 2));
  const auto loaded = wsmc::load_material(path);
  EXPECT_TRUE(loaded.material == m);
  std::filesystem::remove(path);
}

TEST(Wmcx, CorruptionIsDetected) {
  const auto good = wsmc::serialize_material(wsmc::generate_material(1, 3, 10, 2), 1);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(load_error(bad), ErrorKind::format);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(load_error(bad), ErrorKind::format);
  bad = good;
  bad.resize(bad.size() - 1);
  EXPECT_EQ(load_error(bad), ErrorKind::format);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(load_error(bad), ErrorKind::format);
  EXPECT_EQ(load_error({}), ErrorKind::format);
  // Unsorted energies inside an otherwise well-formed stream.
  bad = good;
  std::swap_ranges(bad.begin() + 28 + 8, bad.begin() + 28 + 12, bad.begin() + 28 + 12);
  EXPECT_EQ(load_error(bad), ErrorKind::format);
}

TEST(Wmcx, MissingFileIsIoError) {
  try {
    wsmc::load_material(temp_path("missing"));
    FAIL();
  } catch (const wsmc::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
