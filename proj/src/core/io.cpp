#include "srprom/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace srprom::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSrphMagic = "SRPH\n";
constexpr double kProminenceTolerance = 1e-12;

std::string record_context(std::size_t index) { return "manifest record " + std::to_string(index) + ": "; }

template <typename T>
T required_field(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(record_context(index) + "missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(record_context(index) + "field '" + key + "' has the wrong type");
  }
}

ArtifactRecord record_from_json(const json& obj, std::size_t index) {
  if (!obj.is_object()) throw ValidationError(record_context(index) + "not a JSON object");
  ArtifactRecord r;
  r.component = required_field<std::string>(obj, "component", index);
  r.source = required_field<std::string>(obj, "source", index);
  r.sr = required_field<std::string>(obj, "sr", index);
  r.metric = required_field<std::string>(obj, "metric", index);
  r.mask = required_field<std::string>(obj, "mask", index);
  if (obj.contains("display_dilated")) r.display_dilated = required_field<bool>(obj, "display_dilated", index);
  r.votes_positive = required_field<int>(obj, "votes_pos", index);
  r.votes_total = required_field<int>(obj, "votes_total", index);
  if (r.votes_positive < 0 || r.votes_total < 0)
    throw ValidationError(record_context(index) + "vote counts must be non-negative");
  if (r.votes_positive > r.votes_total)
    throw ValidationError(record_context(index) + "votes_pos exceeds votes_total");
  r.update_prominence();

  auto it = obj.find("prominence");
  if (it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw ValidationError(record_context(index) + "field 'prominence' has the wrong type");
    const double stored = it->get<double>();
    if (!r.prominence) throw ValidationError(record_context(index) + "prominence given without votes");
    if (std::abs(stored - *r.prominence) > kProminenceTolerance)
      throw ValidationError(record_context(index) + "prominence does not equal votes_pos/votes_total");
  }
  return r;
}

ordered_json record_to_json(const ArtifactRecord& r) {
  ordered_json obj;
  obj["component"] = r.component;
  obj["source"] = r.source;
  obj["sr"] = r.sr;
  obj["metric"] = r.metric;
  obj["mask"] = r.mask;
  obj["display_dilated"] = r.display_dilated;
  obj["votes_pos"] = r.votes_positive;
  obj["votes_total"] = r.votes_total;
  if (r.prominence) {
    obj["prominence"] = *r.prominence;
  } else {
    obj["prominence"] = nullptr;
  }
  return obj;
}

void append_le_f32(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float read_le_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

struct PngImage {
  png_image image{};
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

void begin_read(PngImage& png, const std::filesystem::path& path) {
  if (!png_image_begin_read_from_file(&png.image, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + png.image.message);
}

void ensure_parent(const std::filesystem::path& path) {
  if (!path.has_parent_path()) return;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
}

}  // namespace

std::vector<ArtifactRecord> parse_manifest(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed manifest JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("manifest must be a JSON array");
  std::vector<ArtifactRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(record_from_json(doc[i], i));
  return out;
}

std::string format_manifest(const std::vector<ArtifactRecord>& records) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr.dump(2) + "\n";
}

std::vector<ArtifactRecord> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file_bytes(path));
}

void write_manifest(const std::filesystem::path& path, const std::vector<ArtifactRecord>& records) {
  write_file_bytes(path, format_manifest(records));
}

std::string encode_srph(const Heatmap& field, const std::optional<GridLayout>& grid) {
  ordered_json header;
  header["w"] = field.width();
  header["h"] = field.height();
  header["polarity"] = to_string(field.polarity());
  if (!field.provider().empty()) header["provider"] = field.provider();
  if (grid) {
    header["block"] = grid->block;
    header["stride"] = grid->stride;
    header["image_w"] = grid->image.width;
    header["image_h"] = grid->image.height;
  }
  std::string out(kSrphMagic);
  out += header.dump();
  out.push_back('\n');
  out.reserve(out.size() + field.values().size() * 4);
  for (double v : field.values()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw ValidationError("heatmap value is not representable as a finite float32");
    append_le_f32(out, f);
  }
  return out;
}

SrphContent decode_srph(std::string_view bytes) {
  if (bytes.substr(0, kSrphMagic.size()) != kSrphMagic) throw ValidationError("SRPH: bad magic");
  const auto header_end = bytes.find('\n', kSrphMagic.size());
  if (header_end == std::string_view::npos) throw ValidationError("SRPH: unterminated header");
  json header;
  try {
    header = json::parse(bytes.substr(kSrphMagic.size(), header_end - kSrphMagic.size()));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("SRPH: malformed header: ") + e.what());
  }
  int w = 0;
  int h = 0;
  Polarity polarity{};
  try {
    w = header.at("w").get<int>();
    h = header.at("h").get<int>();
    polarity = polarity_from_string(header.at("polarity").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("SRPH: header missing w/h/polarity: ") + e.what());
  }
  if (w < 1 || h < 1) throw ValidationError("SRPH: non-positive dimensions");

  const auto payload = bytes.substr(header_end + 1);
  const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 4;
  if (payload.size() != expected) {
    throw ValidationError("SRPH: payload length mismatch (header says " + std::to_string(expected) +
                          " bytes, found " + std::to_string(payload.size()) + ")");
  }
  std::vector<double> values(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = read_le_f32(payload.data() + 4 * i);
    if (!std::isfinite(f)) throw ValidationError("SRPH: non-finite value at index " + std::to_string(i));
    values[i] = f;
  }
  SrphContent content{Heatmap(w, h, polarity, std::move(values)), std::nullopt};
  if (auto it = header.find("provider"); it != header.end() && it->is_string()) {
    content.field.set_provider(it->get<std::string>());
  }
  if (header.contains("block")) {
    try {
      GridLayout g;
      g.block = header.at("block").get<int>();
      g.stride = header.at("stride").get<int>();
      g.image = {header.at("image_w").get<int>(), header.at("image_h").get<int>()};
      content.grid = g;
    } catch (const json::exception& e) {
      throw ValidationError(std::string("SRPH: incomplete block layout: ") + e.what());
    }
  }
  return content;
}

void write_heatmap(const std::filesystem::path& path, const Heatmap& field, const std::optional<GridLayout>& grid) {
  write_file_bytes(path, encode_srph(field, grid));
}

SrphContent read_srph(const std::filesystem::path& path) {
  try {
    return decode_srph(read_file_bytes(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Heatmap read_heatmap(const std::filesystem::path& path) { return read_srph(path).field; }

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<png_byte> pixels(mask.bits().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.bits()[i] ? 255 : 0;
  PngImage png;
  png.image.width = static_cast<png_uint_32>(mask.width());
  png.image.height = static_cast<png_uint_32>(mask.height());
  png.image.format = PNG_FORMAT_GRAY;
  ensure_parent(path);
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, pixels.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + png.image.message);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  const auto fmt = png.image.format;
  if (fmt & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA))
    throw ValidationError(path.string() + ": mask PNG must be single-channel grayscale");
  if (fmt & PNG_FORMAT_FLAG_LINEAR) throw ValidationError(path.string() + ": mask PNG must be 8-bit, not 16-bit");
  png.image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr))
    throw IoError("cannot decode PNG " + path.string() + ": " + png.image.message);
  BinaryMask mask(static_cast<int>(png.image.width), static_cast<int>(png.image.height));
  for (std::size_t i = 0; i < pixels.size(); ++i) mask.bits()[i] = pixels[i] != 0 ? 1 : 0;
  return mask;
}

void check_mask_matches(const BinaryMask& mask, Size sr_size, std::string_view what) {
  if (mask.size() != sr_size) {
    throw ValidationError(std::string(what) + " is " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + " but the SR image is " + std::to_string(sr_size.width) +
                          "x" + std::to_string(sr_size.height));
  }
}

ImageBuffer read_image(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  const auto fmt = png.image.format;
  const bool color = (fmt & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (fmt & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool wide = (fmt & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (wide && alpha) throw IoError(path.string() + ": 16-bit PNG with alpha is not supported");

  const int channels = color ? 3 : 1;
  const int stored = channels + (alpha ? 1 : 0);
  png.image.format = (color ? PNG_FORMAT_FLAG_COLOR : 0u) | (alpha ? PNG_FORMAT_FLAG_ALPHA : 0u) |
                     (wide ? PNG_FORMAT_FLAG_LINEAR : 0u);
  const int w = static_cast<int>(png.image.width);
  const int h = static_cast<int>(png.image.height);
  std::vector<float> data(static_cast<std::size_t>(w) * h * channels);

  auto unpack = [&](auto* pixels, float scale) {
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
      for (int c = 0; c < channels; ++c) data[p * channels + c] = static_cast<float>(pixels[p * stored + c]) / scale;
    }
  };
  if (wide) {
    std::vector<png_uint_16> pixels(PNG_IMAGE_SIZE(png.image) / 2);
    if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr))
      throw IoError("cannot decode PNG " + path.string() + ": " + png.image.message);
    unpack(pixels.data(), 65535.0f);
  } else {
    std::vector<png_byte> pixels(PNG_IMAGE_SIZE(png.image));
    if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr))
      throw IoError("cannot decode PNG " + path.string() + ": " + png.image.message);
    unpack(pixels.data(), 255.0f);
  }
  return ImageBuffer(w, h, channels, std::move(data));
}

void write_image(const std::filesystem::path& path, const ImageBuffer& image) {
  std::vector<png_byte> pixels(image.data().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<png_byte>(std::lround(std::clamp(image.data()[i], 0.0f, 1.0f) * 255.0f));
  }
  PngImage png;
  png.image.width = static_cast<png_uint_32>(image.width());
  png.image.height = static_cast<png_uint_32>(image.height());
  png.image.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  ensure_parent(path);
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, pixels.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + png.image.message);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace srprom::io
