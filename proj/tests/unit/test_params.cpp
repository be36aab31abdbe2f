#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "sqlova/error.hpp"
#include "sqlova/params.hpp"

using namespace sqlova;

namespace {

ParamStore sample_store() {
  ParamStore s;
  s.add("encoder.a", Matrix::from_rows({{1, 2, 3}, {4, 5, 6}}), ParamGroup::Encoder);
  s.add("head.b", Matrix::from_rows({{-0.5, 1e-300}}), ParamGroup::Head);
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Internal;
}

}  // namespace

TEST(Params, StoreLookup) {
  ParamStore s = sample_store();
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.scalar_count(), 8u);
  EXPECT_EQ(s.id("head.b"), 1u);
  EXPECT_FALSE(s.find("nope"));
  EXPECT_EQ(s.group(0), ParamGroup::Encoder);
  EXPECT_EQ(kind_of([&] { s.id("nope"); }), ErrorKind::Contract);
}

TEST(Params, CheckpointRoundTripIsExact) {
  ParamStore s = sample_store();
  const Checkpoint c = snapshot(s, R"({"k":1})");
  const std::string bytes = encode_checkpoint(c);
  EXPECT_EQ(bytes.substr(0, 8), "SQLVCKPT");
  const Checkpoint d = decode_checkpoint(bytes);
  EXPECT_EQ(d.meta, c.meta);
  ASSERT_EQ(d.arrays.size(), 2u);
  EXPECT_EQ(d.arrays[1].first, "head.b");
  EXPECT_EQ(d.arrays[1].second, s.value(1));
  EXPECT_EQ(encode_checkpoint(d), bytes);
}

TEST(Params, CheckpointFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "sqlova_params_test.ckpt";
  ParamStore s = sample_store();
  save_checkpoint(path.string(), snapshot(s, "{}"));
  ParamStore t = sample_store();
  t.value(0).fill(0.0);
  restore(t, load_checkpoint(path.string()));
  EXPECT_EQ(t.value(0), s.value(0));
  std::filesystem::remove(path);
  EXPECT_EQ(kind_of([&] { load_checkpoint(path.string()); }), ErrorKind::Io);
}

TEST(Params, DecodeRejectsCorruption) {
  const std::string bytes = encode_checkpoint(snapshot(sample_store(), "{}"));
  EXPECT_EQ(kind_of([&] { decode_checkpoint("NOTACKPT" + bytes.substr(8)); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([&] { decode_checkpoint(bytes.substr(0, bytes.size() - 3)); }),
            ErrorKind::Parse);
  EXPECT_EQ(kind_of([&] { decode_checkpoint(bytes + "x"); }), ErrorKind::Parse);
}

TEST(Params, RestoreChecksNamesAndShapes) {
  ParamStore s = sample_store();
  Checkpoint c = snapshot(s, "{}");
  c.arrays.emplace_back("extra", Matrix(1, 1));
  EXPECT_EQ(kind_of([&] { restore(s, c, true); }), ErrorKind::Config);
  restore(s, c, false);

  Checkpoint missing = snapshot(s, "{}");
  missing.arrays.pop_back();
  EXPECT_EQ(kind_of([&] { restore(s, missing); }), ErrorKind::Config);

  Checkpoint wrong = snapshot(s, "{}");
  wrong.arrays[0].second = Matrix(3, 2);
  EXPECT_EQ(kind_of([&] { restore(s, wrong); }), ErrorKind::Config);
}

TEST(Params, GradBufferAddScaleClear) {
  ParamStore s = sample_store();
  GradBuffer a(s), b(s);
  EXPECT_EQ(a.find(0), nullptr);
  a.at(0).fill(1.0);
  b.at(0).fill(2.0);
  b.at(1).fill(3.0);
  a.add(b);
  a.scale(0.5);
  EXPECT_DOUBLE_EQ((*a.find(0))[0], 1.5);
  EXPECT_DOUBLE_EQ((*a.find(1))[1], 1.5);
  a.clear();
  EXPECT_EQ(a.find(0), nullptr);
}

TEST(Params, InitIsSeeded) {
  Rng r1(9), r2(9);
  Matrix a(3, 3), b(3, 3);
  init_uniform(a, r1, 0.1);
  init_uniform(b, r2, 0.1);
  EXPECT_EQ(a, b);
  for (double v : a.values()) EXPECT_LE(std::fabs(v), 0.1);
}
