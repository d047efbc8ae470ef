#include "ctstack/dicom.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numeric>

namespace ctstack {

namespace {

constexpr std::size_t kPreambleSize = 132;  // 128 zeros + "DICM"
constexpr const char* kExplicitLittleEndian = "1.2.840.10008.1.2.1";

constexpr std::uint32_t tag_key(std::uint16_t group, std::uint16_t element) {
  return (static_cast<std::uint32_t>(group) << 16) | element;
}

// Tags the reader extracts.
constexpr std::uint32_t kTagTransferSyntax = tag_key(0x0002, 0x0010);
constexpr std::uint32_t kTagInstanceNumber = tag_key(0x0020, 0x0013);
constexpr std::uint32_t kTagSliceLocation = tag_key(0x0020, 0x1041);
constexpr std::uint32_t kTagRows = tag_key(0x0028, 0x0010);
constexpr std::uint32_t kTagColumns = tag_key(0x0028, 0x0011);
constexpr std::uint32_t kTagBitsAllocated = tag_key(0x0028, 0x0100);
constexpr std::uint32_t kTagPixelRepresentation = tag_key(0x0028, 0x0103);
constexpr std::uint32_t kTagWindowCenter = tag_key(0x0028, 0x1050);
constexpr std::uint32_t kTagWindowWidth = tag_key(0x0028, 0x1051);
constexpr std::uint32_t kTagRescaleIntercept = tag_key(0x0028, 0x1052);
constexpr std::uint32_t kTagRescaleSlope = tag_key(0x0028, 0x1053);
constexpr std::uint32_t kTagPixelData = tag_key(0x7fe0, 0x0010);

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void skip(std::size_t n) { pos_ += n; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw MalformedStreamError(std::string("truncated ") + what, pos_);
    }
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(
        data_[pos_] | (static_cast<std::uint16_t>(data_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    const std::uint32_t v =
        static_cast<std::uint32_t>(data_[pos_]) |
        (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
        (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
        (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

struct Element {
  std::uint16_t group = 0;
  std::uint16_t element = 0;
  char vr[3] = {0, 0, 0};
  std::span<const std::uint8_t> value;
  std::size_t offset = 0;  // header byte offset within the file

  std::uint32_t key() const { return tag_key(group, element); }
  std::string tag_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "(%04x,%04x)", group, element);
    return buf;
  }
};

bool long_form_vr(const char* vr) {
  static const char* kLong[] = {"OB", "OW", "OF", "OD", "OL", "OV",
                                "SQ", "UC", "UR", "UT", "UN"};
  for (const char* v : kLong) {
    if (vr[0] == v[0] && vr[1] == v[1]) return true;
  }
  return false;
}

Element read_element(ByteReader& reader) {
  Element el;
  el.offset = reader.offset();
  el.group = reader.u16("element tag");
  el.element = reader.u16("element tag");
  const auto vr_bytes = reader.take(2, "value representation");
  el.vr[0] = static_cast<char>(vr_bytes[0]);
  el.vr[1] = static_cast<char>(vr_bytes[1]);
  if (!std::isupper(static_cast<unsigned char>(el.vr[0])) ||
      !std::isupper(static_cast<unsigned char>(el.vr[1]))) {
    throw MalformedStreamError(
        "invalid value representation in element " + el.tag_string(),
        el.offset);
  }
  std::uint32_t length;
  if (long_form_vr(el.vr)) {
    reader.take(2, "reserved length bytes");
    length = reader.u32("element length");
  } else {
    length = reader.u16("element length");
  }
  if (length == 0xffffffffu) {
    throw UnsupportedEncodingError(
        "undefined-length element " + el.tag_string() +
        " (sequences and compressed pixel data are not supported)");
  }
  el.value = reader.take(length, "element value");
  return el;
}

std::string ascii_value(std::span<const std::uint8_t> value) {
  std::string s(reinterpret_cast<const char*>(value.data()), value.size());
  while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

/// First component of a possibly multi-valued decimal string.
double parse_decimal_string(const Element& el) {
  std::string s = ascii_value(el.value);
  if (const auto sep = s.find('\\'); sep != std::string::npos) {
    s = s.substr(0, sep);
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + s.size()) {
    throw MalformedStreamError(
        "unparseable decimal string \"" + s + "\" in element " +
            el.tag_string(),
        el.offset);
  }
  return v;
}

std::uint16_t parse_u16_value(const Element& el) {
  if (el.value.size() != 2) {
    throw MalformedStreamError("element " + el.tag_string() +
                                   " expected a 2-byte value, found " +
                                   std::to_string(el.value.size()) + " bytes",
                               el.offset);
  }
  return static_cast<std::uint16_t>(
      el.value[0] | (static_cast<std::uint16_t>(el.value[1]) << 8));
}

}  // namespace

SliceRecord parse_dicom_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize ||
      std::memcmp(bytes.data() + 128, "DICM", 4) != 0) {
    throw NotDicomError("missing DICM magic after the 128-byte preamble");
  }

  ByteReader reader(bytes);
  reader.skip(kPreambleSize);

  SliceRecord rec;
  std::optional<std::string> transfer_syntax;
  std::optional<double> window_center;
  std::optional<double> window_width;
  bool syntax_checked = false;
  bool have_pixels = false;

  while (reader.remaining() > 0) {
    const Element el = read_element(reader);

    // File meta elements (group 0002) are always explicit little-endian;
    // the declared transfer syntax governs everything after them.
    if (el.group != 0x0002 && !syntax_checked) {
      syntax_checked = true;
      if (transfer_syntax && *transfer_syntax != kExplicitLittleEndian) {
        throw UnsupportedEncodingError("unsupported transfer syntax \"" +
                                       *transfer_syntax +
                                       "\"; only explicit-VR little-endian "
                                       "uncompressed data is supported");
      }
    }

    switch (el.key()) {
      case kTagTransferSyntax:
        transfer_syntax = ascii_value(el.value);
        break;
      case kTagRows:
        rec.rows = parse_u16_value(el);
        break;
      case kTagColumns:
        rec.columns = parse_u16_value(el);
        break;
      case kTagBitsAllocated:
        rec.bits_allocated = parse_u16_value(el);
        if (rec.bits_allocated != 16) {
          throw UnsupportedEncodingError(
              "BitsAllocated " + std::to_string(rec.bits_allocated) +
              " is not supported; only 16-bit pixel data is read");
        }
        break;
      case kTagPixelRepresentation: {
        const int v = parse_u16_value(el);
        if (v != 0 && v != 1) {
          throw UnsupportedEncodingError("PixelRepresentation " +
                                         std::to_string(v) +
                                         " is not supported");
        }
        rec.pixel_representation = v;
        rec.pixel_representation_present = true;
        break;
      }
      case kTagRescaleIntercept:
        rec.rescale_intercept = parse_decimal_string(el);
        break;
      case kTagRescaleSlope:
        rec.rescale_slope = parse_decimal_string(el);
        break;
      case kTagWindowCenter:
        window_center = parse_decimal_string(el);
        break;
      case kTagWindowWidth:
        window_width = parse_decimal_string(el);
        break;
      case kTagInstanceNumber:
        rec.instance_number =
            static_cast<int>(std::llround(parse_decimal_string(el)));
        break;
      case kTagSliceLocation:
        rec.slice_location = parse_decimal_string(el);
        break;
      case kTagPixelData: {
        if (rec.rows <= 0 || rec.columns <= 0) {
          throw MalformedStreamError(
              "PixelData appears before Rows/Columns", el.offset);
        }
        const std::size_t expected = 2 * static_cast<std::size_t>(rec.rows) *
                                     static_cast<std::size_t>(rec.columns);
        if (el.value.size() != expected) {
          throw GeometryMismatchError(
              "PixelData length " + std::to_string(el.value.size()) +
              " does not match 2*rows*columns = " + std::to_string(expected));
        }
        rec.pixels.resize(static_cast<std::size_t>(rec.rows) *
                          static_cast<std::size_t>(rec.columns));
        for (std::size_t i = 0; i < rec.pixels.size(); ++i) {
          const std::uint16_t word = static_cast<std::uint16_t>(
              el.value[2 * i] |
              (static_cast<std::uint16_t>(el.value[2 * i + 1]) << 8));
          rec.pixels[i] = rec.pixel_representation == 1
                              ? static_cast<std::int32_t>(
                                    static_cast<std::int16_t>(word))
                              : static_cast<std::int32_t>(word);
        }
        have_pixels = true;
        break;
      }
      default:
        break;  // unknown element: value already skipped by length
    }
  }

  if (!have_pixels) {
    throw MalformedStreamError("no PixelData element in stream",
                               reader.offset());
  }
  if (window_center && window_width && *window_width > 0.0) {
    rec.window = WindowSpec{*window_center, *window_width};
  }
  return rec;
}

std::string ordering_key_name(OrderingKey key) {
  switch (key) {
    case OrderingKey::instance_number:
      return "instance_number";
    case OrderingKey::slice_location:
      return "slice_location";
    case OrderingKey::filename:
      return "filename";
  }
  return "?";
}

namespace {

OrderingKey choose_ordering(const std::vector<AssemblyEntry>& slices) {
  const bool all_instance =
      std::all_of(slices.begin(), slices.end(), [](const AssemblyEntry& e) {
        return e.record.instance_number.has_value();
      });
  if (all_instance) return OrderingKey::instance_number;
  const bool all_location =
      std::all_of(slices.begin(), slices.end(), [](const AssemblyEntry& e) {
        return e.record.slice_location.has_value();
      });
  if (all_location) return OrderingKey::slice_location;
  return OrderingKey::filename;
}

void require_key_present(const std::vector<AssemblyEntry>& slices,
                         OrderingKey key) {
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const SliceRecord& rec = slices[i].record;
    const bool present = key == OrderingKey::filename ||
                         (key == OrderingKey::instance_number
                              ? rec.instance_number.has_value()
                              : rec.slice_location.has_value());
    if (!present) {
      throw InvalidArgumentError("slice \"" + slices[i].source_name +
                                 "\" is missing the ordering key " +
                                 ordering_key_name(key));
    }
  }
}

}  // namespace

AssembleResult assemble_scan(const ScanAssembly& assembly) {
  if (assembly.slices.empty()) {
    throw InvalidArgumentError("scan assembly needs at least one slice");
  }
  const auto& slices = assembly.slices;

  const SliceRecord& first = slices.front().record;
  for (std::size_t i = 1; i < slices.size(); ++i) {
    const SliceRecord& rec = slices[i].record;
    if (rec.rows != first.rows || rec.columns != first.columns ||
        rec.pixel_representation != first.pixel_representation) {
      throw GeometryMismatchError(
          "slice \"" + slices[i].source_name +
          "\" does not match the first slice's geometry (" +
          std::to_string(rec.columns) + "x" + std::to_string(rec.rows) +
          " vs " + std::to_string(first.columns) + "x" +
          std::to_string(first.rows) + ")");
    }
  }

  const OrderingKey key = assembly.ordering.value_or(choose_ordering(slices));
  require_key_present(slices, key);

  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), 0);
  auto less_by_key = [&](std::size_t a, std::size_t b) {
    switch (key) {
      case OrderingKey::instance_number:
        return *slices[a].record.instance_number <
               *slices[b].record.instance_number;
      case OrderingKey::slice_location:
        return *slices[a].record.slice_location <
               *slices[b].record.slice_location;
      case OrderingKey::filename:
        return slices[a].source_name < slices[b].source_name;
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less_by_key);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!less_by_key(order[i - 1], order[i])) {
      throw AmbiguousOrderError(
          "duplicate " + ordering_key_name(key) + " between slices \"" +
          slices[order[i - 1]].source_name + "\" and \"" +
          slices[order[i]].source_name + "\"");
    }
  }

  AssembleResult result;
  result.ordering_used = key;
  ScanVolume& scan = result.scan;
  scan.scan_id = assembly.scan_id.empty() ? "scan" : assembly.scan_id;
  scan.width = first.columns;
  scan.height = first.rows;
  scan.depth = static_cast<int>(slices.size());
  scan.voxels.resize(scan.slice_size() * static_cast<std::size_t>(scan.depth));

  for (std::size_t z = 0; z < order.size(); ++z) {
    const SliceRecord& rec = slices[order[z]].record;
    if (rec.pixels.size() != scan.slice_size()) {
      throw GeometryMismatchError("slice \"" + slices[order[z]].source_name +
                                  "\" pixel count does not match its "
                                  "declared geometry");
    }
    const RescaleResult rescaled =
        apply_rescale(rec.pixels, rec.rescale_slope, rec.rescale_intercept);
    result.saturated_voxels += rescaled.saturated;
    if (!rec.pixel_representation_present) ++result.slices_defaulted_unsigned;
    std::copy(rescaled.values.begin(), rescaled.values.end(),
              scan.slice(static_cast<int>(z)).begin());
    if (!result.window && rec.window) result.window = rec.window;
  }
  return result;
}

}  // namespace ctstack
