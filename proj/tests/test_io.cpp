#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "sfree/ensembles/ensembles.hpp"
#include "sfree/freelimit/convolution.hpp"
#include "sfree/io/formats.hpp"

using namespace sfree;

namespace {

SquareMatrix random_matrix(Eigen::Index n, std::uint64_t stream) {
  ensembles::PhiloxEngine rng(ensembles::Seed{77, stream});
  CMatrix e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = Complex(rng.normal(), rng.normal()) * 1e-3;
  }
  return SquareMatrix(e);
}

bool bit_equal(const CMatrix& a, const CMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(Complex) * static_cast<std::size_t>(a.size())) == 0;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sfree_io_" + name);
}

}  // namespace

TEST(MatrixIo, BinaryRoundTripIsBitExact) {
  const auto m = random_matrix(7, 1);
  std::stringstream buf;
  io::write_matrix_binary(buf, m);
  const auto back = io::read_matrix_binary(buf);
  EXPECT_TRUE(bit_equal(m.entries(), back.entries()));
  EXPECT_EQ(back.flags(), m.flags());
}

TEST(MatrixIo, BinaryLayout) {
  const SquareMatrix m(CMatrix::Identity(2, 2), MatrixFlag::hermitian | MatrixFlag::unitary);
  std::stringstream buf;
  io::write_matrix_binary(buf, m);
  const std::string s = buf.str();
  ASSERT_EQ(s.size(), 4u + 4u + 8u + 8u + 4u + 4u * 16u);
  EXPECT_EQ(s.substr(0, 4), "SFMX");
  std::uint32_t version = 0;
  std::uint64_t rows = 0;
  std::uint32_t flags = 0;
  double first = 0.0;
  std::memcpy(&version, s.data() + 4, 4);
  std::memcpy(&rows, s.data() + 8, 8);
  std::memcpy(&flags, s.data() + 24, 4);
  std::memcpy(&first, s.data() + 28, 8);
  EXPECT_EQ(version, 1u);
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(flags, 3u);
  EXPECT_EQ(first, 1.0);
}

TEST(MatrixIo, BinaryRejectsBadInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(io::read_matrix_binary(bad), io::FormatError);
  std::stringstream buf;
  io::write_matrix_binary(buf, random_matrix(3, 2));
  std::string s = buf.str();
  s.resize(s.size() - 5);
  std::stringstream cut(s);
  EXPECT_THROW(io::read_matrix_binary(cut), io::FormatError);
}

TEST(MatrixIo, CsvRoundTripIsBitExactAndDetectsFlags) {
  const auto m = random_matrix(6, 3);
  std::stringstream buf;
  io::write_matrix_csv(buf, m);
  EXPECT_TRUE(bit_equal(io::read_matrix_csv(buf).entries(), m.entries()));

  const auto u = ensembles::sample_haar_unitary(8, ensembles::Seed{5, 0});
  std::stringstream ubuf;
  io::write_matrix_csv(ubuf, u);
  const auto back = io::read_matrix_csv(ubuf);
  EXPECT_TRUE(bit_equal(back.entries(), u.entries()));
  EXPECT_TRUE(back.is(MatrixFlag::unitary));
  EXPECT_FALSE(back.is(MatrixFlag::hermitian));
}

TEST(MatrixIo, CsvRejectsRaggedRows) {
  std::stringstream buf("1,0,2,0\n3,0\n");
  EXPECT_THROW(io::read_matrix_csv(buf), io::FormatError);
}

TEST(MatrixIo, PathDispatch) {
  const auto m = random_matrix(4, 4);
  for (const std::string ext : {".sfmx", ".csv"}) {
    const auto p = temp_path("dispatch" + ext).string();
    io::write_matrix(p, m);
    EXPECT_TRUE(bit_equal(io::read_matrix(p).entries(), m.entries()));
    std::filesystem::remove(p);
  }
}

TEST(StepIo, RoundTrip) {
  const auto f = spectral::empirical_cdf({0.1, -2.0 / 3.0, 1e-17, 5.5, 0.1});
  std::stringstream buf;
  io::write_step_csv(buf, f);
  EXPECT_EQ(buf.str().substr(0, 17), "point,cumulative\n");
  EXPECT_EQ(io::read_step_csv(buf), f);
}

TEST(QuantileIo, RoundTrip) {
  const auto q = spectral::QuantileMap::from_function([](double s) { return Complex(std::sin(3 * s), s / 7.0); }, 33);
  std::stringstream buf;
  io::write_quantile_csv(buf, q);
  EXPECT_EQ(io::read_quantile_csv(buf), q);
}

TEST(SupportIo, RoundTrip) {
  const spectral::SupportSet s({{-2.0, -1.0 / 3.0}, {0.1, 0.1}, {1.5, 2.0 + 1e-15}});
  const auto text = io::support_to_json(s);
  const auto back = io::support_from_json(text);
  EXPECT_EQ(back.intervals(), s.intervals());
  EXPECT_EQ(io::support_to_json(spectral::SupportSet({{-2.0, 2.0}})), "[[-2.0,2.0]]");
  EXPECT_THROW(io::support_from_json("{\"a\":1}"), io::FormatError);
  EXPECT_THROW(io::support_from_json("[[1,2,3]]"), io::FormatError);
}

TEST(MeasureIo, RoundTripIsBitExact) {
  const auto mu = freelimit::mixture({{0.3, freelimit::dirac(0.25)}, {0.7, freelimit::semicircle_measure(1.0)}});
  std::stringstream buf;
  io::write_measure(buf, mu);
  const auto back = io::read_measure(buf);
  EXPECT_EQ(back, mu);
  EXPECT_EQ(back.atoms(), mu.atoms());
  EXPECT_EQ(back.model(), nullptr);
}

TEST(MeasureIo, ConvolutionOutputRoundTrip) {
  const auto c = freelimit::free_add_convolve(freelimit::bernoulli_measure(), freelimit::dirac(1.0), {1024});
  const auto p = temp_path("measure.txt").string();
  io::write_measure(p, c);
  EXPECT_EQ(io::read_measure(p), c);
  std::filesystem::remove(p);
}

TEST(MeasureIo, RejectsForeignHeader) {
  std::stringstream buf("{\"format\":\"other\"}\n");
  EXPECT_THROW(io::read_measure(buf), io::FormatError);
  std::stringstream short_rows("{\"format\":\"sfree-measure-1\",\"lo\":0,\"hi\":1,\"n\":3,\"atoms\":[]}\n0,0\n");
  EXPECT_THROW(io::read_measure(short_rows), io::FormatError);
}
