#include "annobench/tensor_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "annobench/text_format.hpp"

namespace annobench {
namespace {

constexpr std::uint8_t kKindVolume = 0;
constexpr std::uint8_t kKindLabelMap = 1;
constexpr std::uint8_t kKindProbMap = 2;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  put_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

float get_f32_le(const std::uint8_t* p) {
  return std::bit_cast<float>(get_u32_le(p));
}

struct Header {
  Dtype dtype;
  std::uint8_t kind;
  Dims dims;
  std::size_t payload_offset;
};

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& what, std::size_t offset) {
  throw DataError(path.string() + ": " + what + " at byte offset " +
                  std::to_string(offset));
}

Header parse_header(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "VTF1", 4) != 0)
    fail(path, "bad magic (expected \"VTF1\")", 0);
  if (bytes.size() < 7) fail(path, "truncated header", bytes.size());

  Header h;
  const std::uint8_t dtype_byte = bytes[4];
  if (dtype_byte > 1)
    fail(path, "dtype " + std::to_string(dtype_byte) + " out of range", 4);
  h.dtype = static_cast<Dtype>(dtype_byte);

  h.kind = bytes[5];
  if (h.kind > 2)
    fail(path, "kind " + std::to_string(h.kind) + " out of range", 5);
  if (h.kind == kKindLabelMap && h.dtype != Dtype::u8)
    fail(path, "labelmap requires dtype u8", 4);
  if (h.kind == kKindProbMap && h.dtype != Dtype::f32)
    fail(path, "probmap requires dtype f32", 4);

  const std::uint8_t rank = bytes[6];
  if (rank != 2 && rank != 3)
    fail(path, "rank " + std::to_string(rank) + " out of range", 6);

  const std::size_t dims_end = 7 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < dims_end) fail(path, "truncated dims", bytes.size());
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32_le(bytes.data() + 7 + 4 * i);
    if (d == 0) fail(path, "zero dim", 7 + 4 * i);
    h.dims.push_back(d);
  }
  h.payload_offset = dims_end;
  return h;
}

std::size_t checked_payload_bytes(const std::filesystem::path& path,
                                  const Header& h) {
  std::size_t count = 1;
  for (std::uint32_t d : h.dims) {
    if (count > std::numeric_limits<std::size_t>::max() / d)
      fail(path, "dims product overflows", 7);
    count *= d;
  }
  if (h.kind == kKindProbMap) count *= kNumClasses;
  const std::size_t elem = h.dtype == Dtype::u8 ? 1 : 4;
  return count * elem;
}

std::vector<float> decode_f32_payload(const std::vector<std::uint8_t>& bytes,
                                      std::size_t offset, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = get_f32_le(bytes.data() + offset + 4 * i);
  return out;
}

}  // namespace

Tensor load_tensor(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_binary_file(path);
  const Header h = parse_header(path, bytes);

  const std::size_t expected = checked_payload_bytes(path, h);
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have < expected)
    fail(path,
         "truncated payload (need " + std::to_string(expected) +
             " bytes, have " + std::to_string(have) + ")",
         bytes.size());
  if (have > expected)
    fail(path, "trailing bytes after payload", h.payload_offset + expected);

  const std::size_t pixels = element_count(h.dims);
  switch (h.kind) {
    case kKindVolume: {
      if (h.dtype == Dtype::u8) {
        std::vector<std::uint8_t> data(bytes.begin() + h.payload_offset,
                                       bytes.end());
        return Volume(Grid<std::uint8_t>(h.dims, std::move(data)));
      }
      return Volume(Grid<float>(
          h.dims, decode_f32_payload(bytes, h.payload_offset, pixels)));
    }
    case kKindLabelMap: {
      for (std::size_t i = 0; i < pixels; ++i) {
        const std::uint8_t v = bytes[h.payload_offset + i];
        if (v >= kNumClasses)
          fail(path, "label value " + std::to_string(v) + " >= 4",
               h.payload_offset + i);
      }
      std::vector<std::uint8_t> data(bytes.begin() + h.payload_offset,
                                     bytes.end());
      return LabelMap(Grid<std::uint8_t>(h.dims, std::move(data)));
    }
    default: {
      std::vector<float> data =
          decode_f32_payload(bytes, h.payload_offset, pixels * kNumClasses);
      for (std::size_t p = 0; p < pixels; ++p) {
        double sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) {
          const float v = data[p * kNumClasses + c];
          if (!(v >= 0.0f && v <= 1.0f))
            fail(path, "probability out of [0,1]",
                 h.payload_offset + 4 * (p * kNumClasses + c));
          sum += v;
        }
        if (std::abs(sum - 1.0) > ProbMap::kSumTolerance)
          fail(path,
               "channel sum " + format_double(sum) + " is not 1 within 1e-5",
               h.payload_offset + 4 * p * kNumClasses);
      }
      return ProbMap(h.dims, std::move(data));
    }
  }
}

namespace {

template <typename T>
T expect_kind(Tensor t, const std::filesystem::path& path, const char* want) {
  if (auto* v = std::get_if<T>(&t)) return std::move(*v);
  throw DataError(path.string() + ": expected a " + want + " file");
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
  return expect_kind<Volume>(load_tensor(path), path, "volume");
}
LabelMap load_labelmap(const std::filesystem::path& path) {
  return expect_kind<LabelMap>(load_tensor(path), path, "labelmap");
}
ProbMap load_probmap(const std::filesystem::path& path) {
  return expect_kind<ProbMap>(load_tensor(path), path, "probmap");
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'V', 'T', 'F', '1'});

  const auto push_dims = [&out](const Dims& dims) {
    out.push_back(static_cast<std::uint8_t>(dims.size()));
    for (std::uint32_t d : dims) put_u32_le(out, d);
  };

  if (const auto* vol = std::get_if<Volume>(&t)) {
    out.push_back(static_cast<std::uint8_t>(vol->dtype()));
    out.push_back(kKindVolume);
    push_dims(vol->dims());
    if (vol->dtype() == Dtype::u8) {
      auto vals = vol->u8().values();
      out.insert(out.end(), vals.begin(), vals.end());
    } else {
      for (float v : vol->f32().values()) append_f32_le(out, v);
    }
  } else if (const auto* lab = std::get_if<LabelMap>(&t)) {
    // Constructors enforce label range; re-check so no invalid file is ever
    // produced even if an unchecked path appears later.
    for (std::uint8_t v : lab->values())
      if (v >= kNumClasses)
        throw DataError("refusing to save labelmap with value " +
                        std::to_string(v));
    out.push_back(static_cast<std::uint8_t>(Dtype::u8));
    out.push_back(kKindLabelMap);
    push_dims(lab->dims());
    auto vals = lab->values();
    out.insert(out.end(), vals.begin(), vals.end());
  } else {
    const auto& pm = std::get<ProbMap>(t);
    out.push_back(static_cast<std::uint8_t>(Dtype::f32));
    out.push_back(kKindProbMap);
    push_dims(pm.dims());
    for (float v : pm.values()) append_f32_le(out, v);
  }
  return out;
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tensor(t));
}
void save_tensor(const Volume& v, const std::filesystem::path& path) {
  save_tensor(Tensor(v), path);
}
void save_tensor(const LabelMap& m, const std::filesystem::path& path) {
  save_tensor(Tensor(m), path);
}
void save_tensor(const ProbMap& p, const std::filesystem::path& path) {
  save_tensor(Tensor(p), path);
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(const std::vector<std::uint8_t>& bytes,
                           std::size_t& pos,
                           const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (std::isspace(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) &&
         bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  if (tok.empty())
    throw DataError(path.string() + ": truncated PGM header");
  return tok;
}

std::uint32_t parse_pgm_number(const std::string& tok,
                               const std::filesystem::path& path) {
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw DataError(path.string() + ": bad PGM header token \"" + tok +
                      "\"");
  return static_cast<std::uint32_t>(std::stoul(tok));
}

}  // namespace

Grid<std::uint8_t> load_pgm(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_binary_file(path);
  std::size_t pos = 0;
  if (next_pgm_token(bytes, pos, path) != "P5")
    throw DataError(path.string() + ": not a binary PGM (magic must be P5)");
  const std::uint32_t width = parse_pgm_number(next_pgm_token(bytes, pos, path), path);
  const std::uint32_t height = parse_pgm_number(next_pgm_token(bytes, pos, path), path);
  const std::uint32_t maxval = parse_pgm_number(next_pgm_token(bytes, pos, path), path);
  if (maxval != 255)
    throw DataError(path.string() + ": PGM maxval must be 255, got " +
                    std::to_string(maxval));
  if (width == 0 || height == 0)
    throw DataError(path.string() + ": PGM dims must be >= 1");
  ++pos;  // single whitespace after maxval
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos != count)
    throw DataError(path.string() + ": PGM payload size mismatch (need " +
                    std::to_string(count) + " bytes, have " +
                    std::to_string(bytes.size() - pos) + ")");
  std::vector<std::uint8_t> data(bytes.begin() + pos, bytes.end());
  return Grid<std::uint8_t>(Dims{height, width}, std::move(data));
}

void save_pgm(const Grid<std::uint8_t>& g, const std::filesystem::path& path) {
  if (g.rank() != 2) throw DataError("PGM export requires a 2-D grid");
  std::string header = "P5\n" + std::to_string(g.dims()[1]) + " " +
                       std::to_string(g.dims()[0]) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  auto vals = g.values();
  out.insert(out.end(), vals.begin(), vals.end());
  write_file_atomic(path, out);
}

std::string split_name(Split s) {
  switch (s) {
    case Split::labeled: return "labeled";
    case Split::unlabeled: return "unlabeled";
    default: return "test";
  }
}

namespace {

Split parse_split(const std::string& s, const std::filesystem::path& path) {
  if (s == "labeled") return Split::labeled;
  if (s == "unlabeled") return Split::unlabeled;
  if (s == "test") return Split::test;
  throw DataError(path.string() + ": unknown split \"" + s + "\"");
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("num_classes") ||
      !doc.contains("cases"))
    throw DataError(path.string() +
                    ": manifest must carry num_classes and cases");
  if (doc["num_classes"] != kNumClasses)
    throw DataError(path.string() + ": num_classes must be 4");

  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path()
                                      : std::filesystem::path(".");
  for (const auto& jc : doc["cases"]) {
    ManifestCase c;
    if (!jc.contains("id") || !jc.contains("volume") || !jc.contains("split"))
      throw DataError(path.string() + ": case needs id, volume and split");
    c.id = jc["id"].get<std::string>();
    c.volume = jc["volume"].get<std::string>();
    c.split = parse_split(jc["split"].get<std::string>(), path);
    if (jc.contains("labels") && !jc["labels"].is_null())
      c.labels = jc["labels"].get<std::string>();
    m.cases.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < m.cases.size(); ++i)
    for (std::size_t j = i + 1; j < m.cases.size(); ++j)
      if (m.cases[i].id == m.cases[j].id)
        throw DataError(path.string() + ": duplicate case id \"" +
                        m.cases[i].id + "\"");

  for (const auto& c : m.cases) {
    if ((c.split == Split::labeled || c.split == Split::test) && !c.labels)
      throw DataError(path.string() + ": " + split_name(c.split) + " case \"" +
                      c.id + "\" is missing labels");
    if (!std::filesystem::exists(m.resolve(c.volume)))
      throw DataError(path.string() + ": case \"" + c.id +
                      "\" volume path does not exist: " + c.volume);
    if (c.labels && !std::filesystem::exists(m.resolve(*c.labels)))
      throw DataError(path.string() + ": case \"" + c.id +
                      "\" label path does not exist: " + *c.labels);
  }
  return m;
}

void save_manifest(const DatasetManifest& m,
                   const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["num_classes"] = kNumClasses;
  doc["cases"] = nlohmann::ordered_json::array();
  for (const auto& c : m.cases) {
    nlohmann::ordered_json jc;
    jc["id"] = c.id;
    jc["volume"] = c.volume;
    jc["labels"] = c.labels ? nlohmann::ordered_json(*c.labels)
                            : nlohmann::ordered_json(nullptr);
    jc["split"] = split_name(c.split);
    doc["cases"].push_back(std::move(jc));
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace annobench
