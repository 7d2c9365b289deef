#include "palmkit/pnn/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803u;
constexpr std::uint32_t kLabelMagic = 0x00000801u;

std::uint32_t read_be32(std::ifstream& f, std::uint64_t offset,
                        const char* what) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("idx truncated reading ") + what, offset);
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

std::vector<unsigned char> read_payload(std::ifstream& f, std::uint64_t count,
                                        std::uint64_t offset) {
  std::vector<unsigned char> buf(count);
  if (!f.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(count)))
    throw FormatError("idx truncated reading payload",
                      offset + static_cast<std::uint64_t>(f.gcount()));
  return buf;
}

}  // namespace

Tensor load_idx(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_idx: cannot open '" + path + "'");
  const std::uint32_t magic = read_be32(f, 0, "magic");
  if (magic == kImageMagic) {
    const std::uint32_t n = read_be32(f, 4, "image count");
    const std::uint32_t rows = read_be32(f, 8, "row count");
    const std::uint32_t cols = read_be32(f, 12, "column count");
    if (n == 0 || rows == 0 || cols == 0)
      throw FormatError("idx image header has a zero dimension", 4);
    const std::uint64_t total =
        static_cast<std::uint64_t>(n) * rows * cols;
    const std::vector<unsigned char> buf = read_payload(f, total, 16);
    Tensor out({static_cast<std::int64_t>(n), static_cast<std::int64_t>(rows),
                static_cast<std::int64_t>(cols)});
    for (std::int64_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]) / 255.0;
    return out;
  }
  if (magic == kLabelMagic) {
    const std::uint32_t n = read_be32(f, 4, "label count");
    if (n == 0) throw FormatError("idx label header has a zero count", 4);
    const std::vector<unsigned char> buf = read_payload(f, n, 8);
    Tensor out({static_cast<std::int64_t>(n)});
    for (std::int64_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]);
    return out;
  }
  throw FormatError("idx magic is neither the u8 image nor the u8 label code",
                    0);
}

namespace {

void write_be32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>(v & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void save_idx_images(const std::string& path, const Tensor& images) {
  if (images.rank() != 3)
    throw ShapeError("save_idx_images: expected an [n, rows, cols] tensor");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_idx_images: cannot open '" + path + "'");
  write_be32(f, kImageMagic);
  for (const std::int64_t dim : images.shape())
    write_be32(f, static_cast<std::uint32_t>(dim));
  std::vector<unsigned char> buf(static_cast<std::size_t>(images.size()));
  for (std::int64_t i = 0; i < images.size(); ++i) {
    const double v = images[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("save_idx_images: pixel values must lie in [0, 1]");
    buf[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround(v * 255.0));
  }
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error("save_idx_images: write failed for '" + path + "'");
}

void save_idx_labels(const std::string& path, const Tensor& labels) {
  if (labels.rank() != 1)
    throw ShapeError("save_idx_labels: expected an [n] tensor");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_idx_labels: cannot open '" + path + "'");
  write_be32(f, kLabelMagic);
  write_be32(f, static_cast<std::uint32_t>(labels.size()));
  std::vector<unsigned char> buf(static_cast<std::size_t>(labels.size()));
  for (std::int64_t i = 0; i < labels.size(); ++i) {
    const double v = labels[i];
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
      throw ConfigError("save_idx_labels: labels must be integers in [0, 255]");
    buf[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v);
  }
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error("save_idx_labels: write failed for '" + path + "'");
}

void save_weights(const std::string& path, const PnnWeights& u) {
  nlohmann::json j;
  j["d"] = u.d;
  j["classes"] = kPnnClasses;
  j["widths"] = u.widths;
  std::vector<std::vector<double>> ts, bs;
  for (const Tensor& t : u.T) ts.emplace_back(t.data(), t.data() + t.size());
  for (const Tensor& t : u.b) bs.emplace_back(t.data(), t.data() + t.size());
  j["T"] = ts;
  j["b"] = bs;

  std::ofstream f(path);
  if (!f) throw Error("save_weights: cannot open '" + path + "'");
  f << j.dump(2) << "\n";
  if (!f) throw Error("save_weights: write failed for '" + path + "'");
}

PnnWeights load_weights(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("load_weights: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("weights json: ") + e.what(),
                      e.byte > 0 ? static_cast<std::uint64_t>(e.byte) - 1 : 0);
  }
  try {
    const auto d = j.at("d").get<std::int64_t>();
    const auto classes = j.at("classes").get<std::int64_t>();
    const auto widths = j.at("widths").get<std::vector<std::int64_t>>();
    const auto ts = j.at("T").get<std::vector<std::vector<double>>>();
    const auto bs = j.at("b").get<std::vector<std::vector<double>>>();
    if (classes != kPnnClasses)
      throw FormatError("weights json: unsupported class count", 0);
    if (widths.size() != 3 || ts.size() != 4 || bs.size() != 4)
      throw FormatError("weights json: inconsistent field sizes", 0);
    PnnWeights u = PnnWeights::zeros(d, widths);
    for (std::size_t i = 0; i < 4; ++i) {
      if (static_cast<std::int64_t>(ts[i].size()) != u.T[i].size() ||
          static_cast<std::int64_t>(bs[i].size()) != u.b[i].size())
        throw FormatError("weights json: tensor size mismatch", 0);
      std::memcpy(u.T[i].data(), ts[i].data(), ts[i].size() * sizeof(double));
      std::memcpy(u.b[i].data(), bs[i].data(), bs[i].size() * sizeof(double));
    }
    return u;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights json: ") + e.what(), 0);
  }
}

}  // namespace palmkit
