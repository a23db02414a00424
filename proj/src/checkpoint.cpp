#include "selsa/checkpoint.hpp"

#include "selsa/proposal.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace selsa {

namespace {

constexpr std::string_view kMagic = "selsa-checkpoint";
constexpr int kVersion = 1;

void write_tensor(std::ostream& os, const std::string& name, const Matrix<double>& m) {
  os << "tensor," << name << ',' << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::vector<std::string> next() {
    std::string line;
    if (!std::getline(is_, line)) throw ConfigError("checkpoint truncated at line " + std::to_string(line_ + 1));
    ++line_;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  }

  template <typename T>
  T number(const std::string& s) const {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError("checkpoint line " + std::to_string(line_) + ": bad number '" + s + "'");
    return v;
  }

  int line() const { return line_; }

 private:
  std::istream& is_;
  int line_ = 0;
};

void read_tensor(LineReader& in, const std::string& name, Matrix<double>& m) {
  auto head = in.next();
  if (head.size() != 4 || head[0] != "tensor" || head[1] != name)
    throw ConfigError("checkpoint line " + std::to_string(in.line()) + ": expected tensor record '" + name + "'");
  const auto rows = in.number<Eigen::Index>(head[2]);
  const auto cols = in.number<Eigen::Index>(head[3]);
  if (rows != m.rows() || cols != m.cols())
    throw ConfigError("checkpoint tensor '" + name + "' has shape " + head[2] + "x" + head[3] + ", expected " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  for (Eigen::Index i = 0; i < rows; ++i) {
    auto cells = in.next();
    if (static_cast<Eigen::Index>(cells.size()) != cols)
      throw ConfigError("checkpoint line " + std::to_string(in.line()) + ": wrong column count");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = in.number<double>(cells[j]);
  }
}

}  // namespace

void save_checkpoint(std::ostream& os, const SelsaParams<double>& params) {
  params.validate();
  os << kMagic << ',' << kVersion << '\n';
  os << "feature_dim,sim_dim,num_classes,residual\n";
  os << params.feature_dim() << ',' << params.sim_dim() << ',' << params.num_classes() << ','
     << (params.residual ? 1 : 0) << '\n';
  params.for_each_transform([&](std::string_view name, const AffineTransform<double>& t) {
    write_tensor(os, std::string(name) + ".weight", t.weight);
    write_tensor(os, std::string(name) + ".bias", t.bias);
  });
}

SelsaParams<double> load_checkpoint(std::istream& is) {
  LineReader in(is);
  auto magic = in.next();
  if (magic.size() != 2 || magic[0] != kMagic) throw ConfigError("not a selsa checkpoint");
  if (in.number<int>(magic[1]) != kVersion) throw ConfigError("unsupported checkpoint version " + magic[1]);
  in.next();
  auto dims = in.next();
  if (dims.size() != 4) throw ConfigError("checkpoint header must carry feature_dim,sim_dim,num_classes,residual");
  const auto d = in.number<Eigen::Index>(dims[0]);
  const auto ds = in.number<Eigen::Index>(dims[1]);
  const auto c = in.number<Eigen::Index>(dims[2]);
  const auto residual = in.number<int>(dims[3]);
  if (d < 1 || ds < 1 || c < 1) throw ConfigError("checkpoint header has non-positive dimensions");
  if (residual != 0 && residual != 1) throw ConfigError("checkpoint residual flag must be 0 or 1");

  SelsaParams<double> params(d, ds, c);
  params.residual = residual == 1;
  params.for_each_transform([&](std::string_view name, AffineTransform<double>& t) {
    read_tensor(in, std::string(name) + ".weight", t.weight);
    Matrix<double> b(t.bias.size(), 1);
    read_tensor(in, std::string(name) + ".bias", b);
    t.bias = b.col(0);
  });
  if (!params.all_finite()) throw ConfigError("checkpoint holds non-finite values");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const SelsaParams<double>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  save_checkpoint(os, params);
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

SelsaParams<double> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  try {
    return load_checkpoint(is);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace selsa
