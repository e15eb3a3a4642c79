#include "qlab/instance_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "qlab/error.hpp"

namespace qlab {

namespace {

std::uint64_t byteswap64(std::uint64_t x) {
  std::uint64_t y = 0;
  for (int i = 0; i < 8; ++i) y = (y << 8) | ((x >> (8 * i)) & 0xffU);
  return y;
}

void write_doubles(std::ostream& os, const double* data, Index n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (Index i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, data + i, 8);
      bits = byteswap64(bits);
      os.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
}

void read_doubles(std::istream& is, double* data, Index n) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  require(static_cast<bool>(is), ErrorCode::kIo, "instance: truncated payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (Index i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, data + i, 8);
      bits = byteswap64(bits);
      std::memcpy(data + i, &bits, 8);
    }
  }
}

}  // namespace

void write_instance(std::ostream& os, const DeformedWignerInstance& inst) {
  nlohmann::json header = {{"d", inst.d()},
                           {"r", inst.r()},
                           {"lambda", inst.lambda()},
                           {"gap", inst.gap()},
                           {"seed", inst.seed()}};
  os << header.dump() << '\n';
  write_doubles(os, inst.noise().dense().data(), inst.d() * inst.d());
  write_doubles(os, inst.spike().matrix().data(), inst.d() * inst.r());
  require(static_cast<bool>(os), ErrorCode::kIo, "instance: write failed");
}

InstancePtr read_instance(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorCode::kIo,
          "instance: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("instance header: ") + e.what());
  }
  const Index d = header.at("d").get<Index>();
  const Index r = header.at("r").get<Index>();
  require(d >= 1 && r >= 1 && r <= d, ErrorCode::kInvalidDimension,
          "instance header: bad d/r");
  Matrix w(d, d);
  Matrix u(d, r);
  read_doubles(is, w.data(), d * d);
  read_doubles(is, u.data(), d * r);
  return std::make_shared<const DeformedWignerInstance>(
      DeformedWignerInstance::from_parts(
          SymmetricMatrix::from_dense(std::move(w), 0.0),
          OrthonormalFrame::from_columns(std::move(u), 1e-8),
          header.at("lambda").get<double>(), header.at("gap").get<double>(),
          header.at("seed").get<std::uint64_t>()));
}

void save_instance(const DeformedWignerInstance& inst, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path);
  write_instance(os, inst);
}

InstancePtr load_instance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path);
  return read_instance(is);
}

}  // namespace qlab
