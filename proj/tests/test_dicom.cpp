#include <doctest.h>

#include <algorithm>
#include <chrono>

#include "ctstack/dicom.hpp"
#include "ctstack/util.hpp"

#include "support/dicom_fixture.hpp"
#include "support/testutil.hpp"

using namespace ctstack;

namespace {

std::span<const std::uint8_t> as_span(const std::vector<std::uint8_t>& v) {
  return {v.data(), v.size()};
}

fixture::SliceFixtureSpec basic_spec() {
  fixture::SliceFixtureSpec spec;
  spec.rows = 4;
  spec.columns = 4;
  spec.slope = 1.0;
  spec.intercept = -1024.0;
  spec.pixel_words.resize(16);
  for (std::size_t i = 0; i < 16; ++i) {
    spec.pixel_words[i] = static_cast<std::uint16_t>(i * 3);
  }
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("dicom");

TEST_CASE("a crafted slice file parses back its fields") {
  auto spec = basic_spec();
  spec.instance_number = 12;
  spec.slice_location = 2.5;
  const auto bytes = fixture::build_slice(spec);
  const SliceRecord rec = parse_dicom_file(as_span(bytes));

  CHECK(rec.rows == 4);
  CHECK(rec.columns == 4);
  CHECK(rec.bits_allocated == 16);
  CHECK(rec.rescale_slope == 1.0);
  CHECK(rec.rescale_intercept == -1024.0);
  CHECK(rec.instance_number == 12);
  CHECK(rec.slice_location == 2.5);
  REQUIRE(rec.pixels.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(rec.pixels[i] == static_cast<std::int32_t>(i * 3));
  }
}

TEST_CASE("a stream ending right after DICM has no PixelData") {
  const auto full = fixture::DicomBuilder::without_meta_group();
  REQUIRE(full.bytes().size() == 132);
  CHECK_THROWS_AS(parse_dicom_file(as_span(full.bytes())),
                  MalformedStreamError);
}

TEST_CASE("decimal-string window metadata is extracted") {
  auto spec = basic_spec();
  spec.window_center = -600.0;
  spec.window_width = 1500.0;
  const auto bytes = fixture::build_slice(spec);
  const SliceRecord rec = parse_dicom_file(as_span(bytes));
  REQUIRE(rec.window.has_value());
  CHECK(rec.window->center == -600.0);
  CHECK(rec.window->width == 1500.0);
}

TEST_CASE("multi-valued window tags use the first pair") {
  fixture::DicomBuilder b;
  b.add_us(0x0028, 0x0010, 1);
  b.add_us(0x0028, 0x0011, 1);
  b.add_us(0x0028, 0x0100, 16);
  b.add_us(0x0028, 0x0103, 1);
  b.add_string(0x0028, 0x1050, "DS", "40\\-600");
  b.add_string(0x0028, 0x1051, "DS", "400\\1500");
  b.add_pixel_data({0});
  const SliceRecord rec = parse_dicom_file(as_span(b.bytes()));
  REQUIRE(rec.window.has_value());
  CHECK(rec.window->center == 40.0);
  CHECK(rec.window->width == 400.0);
}

TEST_CASE("missing magic is not DICOM") {
  std::vector<std::uint8_t> junk(200, 0x41);
  CHECK_THROWS_AS(parse_dicom_file(as_span(junk)), NotDicomError);
  std::vector<std::uint8_t> tiny(50, 0);
  CHECK_THROWS_AS(parse_dicom_file(as_span(tiny)), NotDicomError);
}

TEST_CASE("unsupported transfer syntaxes are rejected cleanly") {
  // Implicit VR little endian declared in the meta group.
  fixture::DicomBuilder b("1.2.840.10008.1.2");
  b.add_us(0x0028, 0x0010, 1);
  CHECK_THROWS_AS(parse_dicom_file(as_span(b.bytes())),
                  UnsupportedEncodingError);
}

TEST_CASE("eight-bit allocations are rejected") {
  fixture::DicomBuilder b;
  b.add_us(0x0028, 0x0010, 1);
  b.add_us(0x0028, 0x0011, 1);
  b.add_us(0x0028, 0x0100, 8);
  CHECK_THROWS_AS(parse_dicom_file(as_span(b.bytes())),
                  UnsupportedEncodingError);
}

TEST_CASE("undefined-length pixel data reads as unsupported encoding") {
  fixture::DicomBuilder b;
  b.add_us(0x0028, 0x0010, 1);
  b.add_us(0x0028, 0x0011, 1);
  b.add_us(0x0028, 0x0100, 16);
  b.add_long_element(0x7fe0, 0x0010, "OB", {}, 0xffffffffu);
  CHECK_THROWS_AS(parse_dicom_file(as_span(b.bytes())),
                  UnsupportedEncodingError);
}

TEST_CASE("pixel data length must match the declared geometry") {
  auto spec = basic_spec();
  spec.pixel_words.pop_back();  // 15 words for a 4x4 slice
  const auto bytes = fixture::build_slice(spec);
  CHECK_THROWS_AS(parse_dicom_file(as_span(bytes)), GeometryMismatchError);
}

TEST_CASE("pixel interpretation follows PixelRepresentation") {
  auto spec = basic_spec();
  spec.rows = 1;
  spec.columns = 1;
  spec.pixel_words = {0xffff};

  spec.pixel_representation = 1;
  auto rec = parse_dicom_file(as_span(fixture::build_slice(spec)));
  CHECK(rec.pixels[0] == -1);

  spec.pixel_representation = 0;
  rec = parse_dicom_file(as_span(fixture::build_slice(spec)));
  CHECK(rec.pixels[0] == 65535);

  spec.include_pixel_representation = false;
  rec = parse_dicom_file(as_span(fixture::build_slice(spec)));
  CHECK(rec.pixels[0] == 65535);  // defaults to unsigned
  CHECK_FALSE(rec.pixel_representation_present);
}

TEST_CASE("random truncations terminate in clean malformed-stream errors") {
  auto spec = basic_spec();
  spec.window_center = -600.0;
  spec.window_width = 1500.0;
  spec.instance_number = 3;
  const auto bytes = fixture::build_slice(spec);

  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cut =
        132 + static_cast<std::size_t>(
                  rng.uniform_int(0, static_cast<int>(bytes.size()) - 133));
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(parse_dicom_file({bytes.data(), cut}),
                    MalformedStreamError);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    CHECK(ms < 100.0);
  }
}

TEST_CASE("truncation offsets never exceed the stream length") {
  const auto bytes = fixture::build_slice(basic_spec());
  for (std::size_t cut = 132; cut < bytes.size(); cut += 7) {
    try {
      parse_dicom_file({bytes.data(), cut});
      FAIL("expected a malformed-stream error");
    } catch (const MalformedStreamError& e) {
      CHECK(e.offset() <= cut);
    }
  }
}

TEST_CASE("parse after write recovers every field on random fixtures") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    fixture::SliceFixtureSpec spec;
    spec.rows = rng.uniform_int(1, 16);
    spec.columns = rng.uniform_int(1, 16);
    spec.slope = rng.uniform_int(1, 5);
    spec.intercept = rng.uniform_int(-2048, 100);
    spec.window_center = rng.uniform_int(-1000, 1000);
    spec.window_width = rng.uniform_int(1, 4000);
    spec.instance_number = rng.uniform_int(-5, 500);
    spec.slice_location = rng.uniform_int(-200, 200) * 0.5;
    spec.pixel_representation = rng.uniform_int(0, 1);
    spec.pixel_words.resize(
        static_cast<std::size_t>(spec.rows * spec.columns));
    for (auto& w : spec.pixel_words) {
      w = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
    }

    const SliceRecord rec =
        parse_dicom_file(as_span(fixture::build_slice(spec)));
    CHECK(rec.rows == spec.rows);
    CHECK(rec.columns == spec.columns);
    CHECK(rec.rescale_slope == spec.slope);
    CHECK(rec.rescale_intercept == spec.intercept);
    CHECK(rec.window->center == *spec.window_center);
    CHECK(rec.window->width == *spec.window_width);
    CHECK(rec.instance_number == *spec.instance_number);
    CHECK(rec.slice_location == *spec.slice_location);
  }
}

namespace {

AssemblyEntry make_slice(int value, std::optional<int> instance,
                         std::optional<double> location,
                         const std::string& name) {
  SliceRecord rec;
  rec.rows = 2;
  rec.columns = 2;
  rec.pixel_representation = 1;
  rec.pixel_representation_present = true;
  rec.instance_number = instance;
  rec.slice_location = location;
  rec.pixels.assign(4, value);
  return {std::move(rec), name};
}

}  // namespace

TEST_CASE("assembly sorts by instance number") {
  ScanAssembly assembly;
  assembly.scan_id = "t";
  assembly.slices.push_back(make_slice(30, 3, {}, "a"));
  assembly.slices.push_back(make_slice(10, 1, {}, "b"));
  assembly.slices.push_back(make_slice(20, 2, {}, "c"));

  const AssembleResult result = assemble_scan(assembly);
  CHECK(result.ordering_used == OrderingKey::instance_number);
  CHECK(result.scan.depth == 3);
  CHECK(result.scan.at(0, 0, 0) == 10);
  CHECK(result.scan.at(0, 0, 1) == 20);
  CHECK(result.scan.at(0, 0, 2) == 30);
}

TEST_CASE("a single slice assembles to depth 1") {
  ScanAssembly assembly;
  assembly.slices.push_back(make_slice(5, 1, {}, "only"));
  const AssembleResult result = assemble_scan(assembly);
  CHECK(result.scan.depth == 1);
  CHECK(result.scan.at(1, 1, 0) == 5);
}

TEST_CASE("slice locations order shuffled filenames") {
  ScanAssembly assembly;
  assembly.slices.push_back(make_slice(2, {}, 2.5, "zz"));
  assembly.slices.push_back(make_slice(3, {}, 5.0, "aa"));
  assembly.slices.push_back(make_slice(1, {}, 0.0, "mm"));
  const AssembleResult result = assemble_scan(assembly);
  CHECK(result.ordering_used == OrderingKey::slice_location);
  CHECK(result.scan.at(0, 0, 0) == 1);
  CHECK(result.scan.at(0, 0, 1) == 2);
  CHECK(result.scan.at(0, 0, 2) == 3);
}

TEST_CASE("assembly output is invariant to input permutation") {
  Rng rng(55);
  std::vector<AssemblyEntry> slices;
  for (int i = 0; i < 8; ++i) {
    slices.push_back(make_slice(i * 11, i, {}, "s" + std::to_string(i)));
  }
  ScanAssembly reference;
  reference.slices = slices;
  const auto expected = assemble_scan(reference).scan.voxels;

  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = slices.size(); i > 1; --i) {
      std::swap(slices[i - 1],
                slices[static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<int>(i) - 1))]);
    }
    ScanAssembly shuffled;
    shuffled.slices = slices;
    CHECK(assemble_scan(shuffled).scan.voxels == expected);
  }
}

TEST_CASE("duplicate ordering keys are ambiguous") {
  ScanAssembly assembly;
  assembly.slices.push_back(make_slice(1, 4, {}, "a"));
  assembly.slices.push_back(make_slice(2, 4, {}, "b"));
  CHECK_THROWS_AS(assemble_scan(assembly), AmbiguousOrderError);
}

TEST_CASE("inconsistent geometry is rejected") {
  ScanAssembly assembly;
  assembly.slices.push_back(make_slice(1, 1, {}, "a"));
  assembly.slices.push_back(make_slice(2, 2, {}, "b"));
  assembly.slices[1].record.rows = 3;
  assembly.slices[1].record.pixels.resize(6);
  CHECK_THROWS_AS(assemble_scan(assembly), GeometryMismatchError);
}

TEST_CASE("a forced ordering key must be present everywhere") {
  ScanAssembly assembly;
  assembly.ordering = OrderingKey::slice_location;
  assembly.slices.push_back(make_slice(1, 1, {}, "a"));
  CHECK_THROWS_AS(assemble_scan(assembly), InvalidArgumentError);
}

TEST_CASE("filename ordering is the last resort") {
  ScanAssembly assembly;
  assembly.slices.push_back(make_slice(2, {}, {}, "slice_b"));
  assembly.slices.push_back(make_slice(1, {}, {}, "slice_a"));
  const AssembleResult result = assemble_scan(assembly);
  CHECK(result.ordering_used == OrderingKey::filename);
  CHECK(result.scan.at(0, 0, 0) == 1);
}

TEST_CASE("assembly applies per-slice rescale and picks up the window") {
  ScanAssembly assembly;
  auto entry = make_slice(100, 1, {}, "a");
  entry.record.rescale_slope = 2.0;
  entry.record.rescale_intercept = -1024.0;
  entry.record.window = WindowSpec{-600.0, 1500.0};
  assembly.slices.push_back(std::move(entry));
  const AssembleResult result = assemble_scan(assembly);
  CHECK(result.scan.at(0, 0, 0) == -824);
  REQUIRE(result.window.has_value());
  CHECK(result.window->center == -600.0);
}

TEST_SUITE_END();
