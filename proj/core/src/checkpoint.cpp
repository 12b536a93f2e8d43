#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mpdet/errors.hpp"
#include "mpdet/train.hpp"

namespace mpdet {

namespace {

constexpr const char* kMagic = "mpdet-checkpoint v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_history(std::ostringstream& os, const char* key,
                    const std::vector<double>& h) {
  os << key << " " << h.size();
  for (double v : h) os << " " << format_double(v);
  os << "\n";
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  auto refs = tensor_refs(ck.params);

  std::ostringstream header;
  header << kMagic << "\n";
  header << "nu " << ck.params.nu << "\n";
  header << "nh1 " << ck.params.nh1 << "\n";
  header << "nh2 " << ck.params.nh2 << "\n";
  header << "sq " << ck.params.sq << "\n";
  header << "layers " << ck.T << "\n";
  header << "gnn_rounds " << ck.L << "\n";
  header << "epoch " << ck.epoch << "\n";
  header << "seed " << ck.seed << "\n";
  append_history(header, "loss_history", ck.loss_history);
  append_history(header, "val_ser_history", ck.val_ser_history);
  header << "tensors " << refs.size() << "\n";
  std::int64_t offset = 0;  // bytes from the start of the data section
  for (const auto& r : refs) {
    header << r.name << " " << r.rows << " " << r.cols << " " << offset << "\n";
    offset += r.size() * std::int64_t(sizeof(double));
  }
  header << "data " << offset << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open checkpoint for writing: " + path);
  const std::string h = header.str();
  out.write(h.data(), std::streamsize(h.size()));

  // Row-major little-endian doubles, in directory order.
  std::vector<double> row;
  for (const auto& r : refs) {
    Eigen::Map<const Eigen::MatrixXd> m(r.data, r.rows, r.cols);
    row.resize(std::size_t(r.cols));
    for (Eigen::Index i = 0; i < r.rows; ++i) {
      for (Eigen::Index j = 0; j < r.cols; ++j) row[std::size_t(j)] = m(i, j);
      out.write(reinterpret_cast<const char*>(row.data()),
                std::streamsize(sizeof(double) * std::size_t(r.cols)));
    }
  }
  if (!out) throw InvalidArgument("failed to write checkpoint: " + path);
}

namespace {

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument("checkpoint truncated while reading " + key);
  }
  if (line.rfind(key + " ", 0) != 0) {
    throw InvalidArgument("checkpoint field '" + key + "' missing or out of order");
  }
  return line.substr(key.size() + 1);
}

std::vector<double> parse_history(const std::string& text) {
  std::istringstream is(text);
  std::size_t n = 0;
  if (!(is >> n)) throw InvalidArgument("corrupt history length");
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> h[i])) throw InvalidArgument("corrupt history entry");
  }
  return h;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw InvalidArgument("not a checkpoint file or unsupported version: " + path);
  }

  Checkpoint ck;
  const int nu = std::stoi(expect_line(in, "nu"));
  const int nh1 = std::stoi(expect_line(in, "nh1"));
  const int nh2 = std::stoi(expect_line(in, "nh2"));
  const int sq = std::stoi(expect_line(in, "sq"));
  ck.T = std::stoi(expect_line(in, "layers"));
  ck.L = std::stoi(expect_line(in, "gnn_rounds"));
  ck.epoch = std::stoi(expect_line(in, "epoch"));
  ck.seed = std::stoull(expect_line(in, "seed"));
  ck.loss_history = parse_history(expect_line(in, "loss_history"));
  ck.val_ser_history = parse_history(expect_line(in, "val_ser_history"));

  ck.params = make_mpnn_params(nu, nh1, nh2, sq, 0);
  auto refs = tensor_refs(ck.params);
  const std::size_t count = std::stoul(expect_line(in, "tensors"));
  if (count != refs.size()) {
    throw InvalidArgument("checkpoint tensor count mismatch");
  }
  std::vector<std::int64_t> offsets(count);
  std::int64_t expect_offset = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw InvalidArgument("checkpoint truncated");
    std::istringstream is(line);
    std::string name;
    std::int64_t rows, cols, off;
    if (!(is >> name >> rows >> cols >> off)) {
      throw InvalidArgument("corrupt tensor directory entry");
    }
    if (name != refs[i].name || rows != refs[i].rows || cols != refs[i].cols) {
      throw InvalidArgument("checkpoint tensor '" + name +
                            "' has unexpected name or shape");
    }
    if (off != expect_offset) {
      throw InvalidArgument("checkpoint tensor offsets are inconsistent");
    }
    offsets[i] = off;
    expect_offset += rows * cols * std::int64_t(sizeof(double));
  }
  const std::int64_t data_bytes = std::stoll(expect_line(in, "data"));
  if (data_bytes != expect_offset) {
    throw InvalidArgument("checkpoint data size mismatch");
  }

  std::vector<double> row;
  for (auto& r : refs) {
    Eigen::Map<Eigen::MatrixXd> m(r.data, r.rows, r.cols);
    row.resize(std::size_t(r.cols));
    for (Eigen::Index i = 0; i < r.rows; ++i) {
      in.read(reinterpret_cast<char*>(row.data()),
              std::streamsize(sizeof(double) * std::size_t(r.cols)));
      if (!in) {
        throw InvalidArgument("checkpoint truncated in tensor data: " +
                              std::string(r.name));
      }
      for (Eigen::Index j = 0; j < r.cols; ++j) m(i, j) = row[std::size_t(j)];
    }
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw InvalidArgument("trailing bytes after checkpoint data");
  }
  if (!ck.params.all_finite()) {
    throw InvalidArgument("checkpoint contains non-finite parameters");
  }
  return ck;
}

}  // namespace mpdet
