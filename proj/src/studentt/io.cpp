#include "palmkit/studentt/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

constexpr char kMagic[4] = {'T', 'M', 'M', 'D'};

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, std::uint64_t offset,
                       const char* what) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("dataset truncated reading ") + what,
                      offset);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_dataset: cannot open '" + path + "'");
  f.write(kMagic, 4);
  write_u32(f, static_cast<std::uint32_t>(data.n));
  write_u32(f, static_cast<std::uint32_t>(data.d));
  f.write(reinterpret_cast<const char*>(data.points.data()),
          static_cast<std::streamsize>(sizeof(double)) * data.points.size());
  if (!f) throw Error("save_dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_dataset: cannot open '" + path + "'");
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("dataset magic is not TMMD", 0);
  const std::uint32_t n = read_u32(f, 4, "n");
  const std::uint32_t d = read_u32(f, 8, "d");
  if (n == 0 || d == 0) throw FormatError("dataset header has zero n or d", 4);

  Dataset out;
  out.n = n;
  out.d = d;
  out.points = Tensor::matrix(out.n, out.d);
  const std::streamsize bytes =
      static_cast<std::streamsize>(sizeof(double)) * out.points.size();
  if (!f.read(reinterpret_cast<char*>(out.points.data()), bytes))
    throw FormatError("dataset truncated reading samples",
                      12 + static_cast<std::uint64_t>(f.gcount()));
  for (std::int64_t i = 0; i < out.points.size(); ++i)
    if (!std::isfinite(out.points[i]))
      throw FormatError("dataset contains a non-finite sample value",
                        12 + static_cast<std::uint64_t>(i) * sizeof(double));
  return out;
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("load_dataset_csv: cannot open '" + path + "'");
  std::vector<double> values;
  std::int64_t d = -1;
  std::int64_t n = 0;
  std::uint64_t line_start = 0;
  std::string line;
  while (std::getline(f, line)) {
    const std::uint64_t this_line = line_start;
    line_start += line.size() + 1;
    if (line.empty()) continue;
    std::int64_t cols = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const std::string field = line.substr(pos, comma - pos);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw FormatError("csv field is not a number", this_line + pos);
      }
      while (used < field.size() &&
             (field[used] == ' ' || field[used] == '\t' || field[used] == '\r'))
        ++used;
      if (used != field.size())
        throw FormatError("csv field has trailing characters",
                          this_line + pos + used);
      if (!std::isfinite(v))
        throw FormatError("csv field is not finite", this_line + pos);
      values.push_back(v);
      ++cols;
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (d < 0) d = cols;
    if (cols != d)
      throw FormatError("csv row has inconsistent column count", this_line);
    ++n;
  }
  if (n == 0) throw FormatError("csv file has no rows", 0);

  Dataset out;
  out.n = n;
  out.d = d;
  out.points = Tensor::matrix(n, d);
  std::memcpy(out.points.data(), values.data(), values.size() * sizeof(double));
  return out;
}

void save_params(const std::string& path, const TmmParams& params) {
  nlohmann::json j;
  j["K"] = params.K;
  j["d"] = params.d;
  j["eps"] = params.eps;
  j["alpha_raw"] = std::vector<double>(
      params.alpha_raw.data(), params.alpha_raw.data() + params.alpha_raw.size());
  j["nu_raw"] = std::vector<double>(params.nu_raw.data(),
                                    params.nu_raw.data() + params.nu_raw.size());
  std::vector<double> mu_cm;
  for (std::int64_t k = 0; k < params.K; ++k)
    for (std::int64_t r = 0; r < params.d; ++r)
      mu_cm.push_back(params.mu(r, k));
  j["mu"] = mu_cm;
  std::vector<std::vector<double>> sig;
  for (const Tensor& s : params.sigma_raw)
    sig.emplace_back(s.data(), s.data() + s.size());
  j["sigma_raw"] = sig;

  std::ofstream f(path);
  if (!f) throw Error("save_params: cannot open '" + path + "'");
  f << j.dump(2) << "\n";
  if (!f) throw Error("save_params: write failed for '" + path + "'");
}

TmmParams load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("load_params: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("params json: ") + e.what(),
                      e.byte > 0 ? static_cast<std::uint64_t>(e.byte) - 1 : 0);
  }
  TmmParams p;
  try {
    p.K = j.at("K").get<std::int64_t>();
    p.d = j.at("d").get<std::int64_t>();
    p.eps = j.at("eps").get<double>();
    const auto a = j.at("alpha_raw").get<std::vector<double>>();
    const auto nu = j.at("nu_raw").get<std::vector<double>>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto sig = j.at("sigma_raw").get<std::vector<std::vector<double>>>();
    if (p.K < 1 || p.d < 1 ||
        static_cast<std::int64_t>(a.size()) != p.K ||
        static_cast<std::int64_t>(nu.size()) != p.K ||
        static_cast<std::int64_t>(mu.size()) != p.K * p.d ||
        static_cast<std::int64_t>(sig.size()) != p.K)
      throw FormatError("params json: inconsistent field sizes", 0);
    p.alpha_raw = Tensor::vector(p.K);
    p.nu_raw = Tensor::vector(p.K);
    p.mu = Tensor::matrix(p.d, p.K);
    for (std::int64_t k = 0; k < p.K; ++k) {
      p.alpha_raw[k] = a[static_cast<std::size_t>(k)];
      p.nu_raw[k] = nu[static_cast<std::size_t>(k)];
      for (std::int64_t r = 0; r < p.d; ++r)
        p.mu(r, k) = mu[static_cast<std::size_t>(k * p.d + r)];
      if (static_cast<std::int64_t>(sig[static_cast<std::size_t>(k)].size()) !=
          p.d * p.d)
        throw FormatError("params json: bad scatter matrix size", 0);
      Tensor s = Tensor::matrix(p.d, p.d);
      std::memcpy(s.data(), sig[static_cast<std::size_t>(k)].data(),
                  static_cast<std::size_t>(p.d * p.d) * sizeof(double));
      p.sigma_raw.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("params json: ") + e.what(), 0);
  }
  return p;
}

}  // namespace palmkit
