#include <doctest.h>

#include "reld/error.hpp"
#include "reld/noise_lab.hpp"
#include "reld/video_matrix.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <fstream>

using namespace reld;
namespace fs = std::filesystem;

namespace {

void write_raw_pgm(const fs::path& file, int w, int h, const std::vector<std::uint8_t>& px, const std::string& extra = "") {
  std::ofstream out(file, std::ios::binary);
  out << "P5\n" << extra << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace

TEST_CASE("load_frames vectorizes row-major and orders by index") {
  const auto dir = testing::fresh_temp_dir("load3");
  // Written out of order on purpose.
  write_raw_pgm(dir / "frame_00002.pgm", 2, 2, {9, 10, 11, 12});
  write_raw_pgm(dir / "frame_00000.pgm", 2, 2, {1, 2, 3, 4}, "# a comment\n");
  write_raw_pgm(dir / "frame_00001.pgm", 2, 2, {5, 6, 7, 8});
  std::ofstream(dir / "notes.txt") << "ignored";

  const VideoMatrix v = load_frames(dir);
  CHECK(v.pixels() == 4);
  CHECK(v.frames() == 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 4; ++i) CHECK(v.data(i, k) == doctest::Approx(1 + 4 * k + i));
}

TEST_CASE("load_frames rejects bad directories and frames") {
  CHECK_THROWS_AS(load_frames("/nonexistent/reld/frames"), IoError);

  const auto empty = testing::fresh_temp_dir("empty");
  CHECK_THROWS_AS(load_frames(empty), IoError);

  const auto mixed = testing::fresh_temp_dir("mixed");
  write_raw_pgm(mixed / "frame_00000.pgm", 2, 2, {1, 2, 3, 4});
  write_raw_pgm(mixed / "frame_00001.pgm", 3, 2, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(load_frames(mixed), ShapeError);

  const auto broken = testing::fresh_temp_dir("broken");
  std::ofstream(broken / "frame_00000.pgm") << "P2\n2 2\n255\n1 2 3 4\n";
  CHECK_THROWS_AS(load_frames(broken), IoError);

  const auto truncated = testing::fresh_temp_dir("truncated");
  write_raw_pgm(truncated / "frame_00000.pgm", 4, 4, {1, 2, 3});
  CHECK_THROWS_AS(load_frames(truncated), IoError);
}

TEST_CASE("single all-zero frame gives a zero column") {
  const auto dir = testing::fresh_temp_dir("zero");
  write_raw_pgm(dir / "frame_00000.pgm", 4, 4, std::vector<std::uint8_t>(16, 0));
  const VideoMatrix v = load_frames(dir);
  CHECK(v.pixels() == 16);
  CHECK(v.frames() == 1);
  CHECK(v.data.isZero(0.0));
}

TEST_CASE("store then load is bit-exact for integer data and clamps otherwise") {
  Rng rng(3);
  const FrameGeometry g{5, 7, 8};
  Eigen::MatrixXd data(35, 4);
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = static_cast<double>(rng.next_u64() % 256);
  const VideoMatrix v(g, data);
  const auto dir = testing::fresh_temp_dir("roundtrip");
  store_frames(v, dir);
  CHECK(load_frames(dir).data == v.data);

  Eigen::MatrixXd odd = data;
  odd(0, 0) = 300.2;
  odd(1, 0) = -5.0;
  odd(2, 0) = 17.5;  // rounds half away from zero
  odd(3, 0) = 17.49;
  store_frames(VideoMatrix(g, odd), dir);
  const VideoMatrix back = load_frames(dir);
  CHECK(back.data(0, 0) == 255.0);
  CHECK(back.data(1, 0) == 0.0);
  CHECK(back.data(2, 0) == 18.0);
  CHECK(back.data(3, 0) == 17.0);
  CHECK_THROWS_AS(store_frames(v, "/proc/reld_cannot_write_here"), IoError);
}

TEST_CASE("vectorize and devectorize are inverse") {
  Rng rng(11);
  const FrameGeometry g{6, 9, 8};
  const Eigen::MatrixXd image = testing::gaussian_matrix(6, 9, rng);
  CHECK(devectorize(vectorize(image), g) == image);
  const Eigen::VectorXd col = testing::gaussian_vector(54, rng);
  CHECK(vectorize(devectorize(col, g)) == col);
}

TEST_CASE("psnr on identical sequences is the infinite sentinel") {
  const VideoMatrix v = testing::rank3_video(8, 8, 3);
  const PsnrReport r = psnr(v, v);
  for (double db : r.per_frame_db) CHECK(std::isinf(db));
  CHECK(r.finite_frames == 0);
  CHECK(format_db(r.per_frame_db[0]) == "inf");
}

TEST_CASE("psnr of a constant offset of 16") {
  const FrameGeometry g{4, 4, 8};
  const VideoMatrix ref(g, Eigen::MatrixXd::Zero(16, 2));
  const VideoMatrix test(g, Eigen::MatrixXd::Constant(16, 2, 16.0));
  const PsnrReport r = psnr(ref, test);
  const double expected = 10.0 * std::log10(255.0 * 255.0 / 256.0);
  CHECK(expected == doctest::Approx(24.0486).epsilon(1e-4));
  for (double db : r.per_frame_db) CHECK(db == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.mean_db == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("psnr excludes infinite frames from the mean and rejects shape mismatch") {
  const FrameGeometry g{2, 2, 8};
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 2);
  Eigen::MatrixXd b = a;
  b.col(1).setConstant(16.0);
  const PsnrReport r = psnr(VideoMatrix(g, a), VideoMatrix(g, b));
  CHECK(std::isinf(r.per_frame_db[0]));
  CHECK(r.finite_frames == 1);
  CHECK(r.mean_db == doctest::Approx(r.per_frame_db[1]));
  CHECK_THROWS_AS(psnr(VideoMatrix(g, a), VideoMatrix(g, Eigen::MatrixXd::Zero(4, 3))), ShapeError);
}

TEST_CASE("psnr of Gaussian noise sigma 25 matches 10 log10(255^2 / 625)") {
  const FrameGeometry g{100, 100, 8};
  const VideoMatrix ref(g, Eigen::MatrixXd::Constant(10000, 10, 128.0));
  const VideoMatrix noisy = add_gaussian(ref, 25.0, 5);
  const double expected = 10.0 * std::log10(255.0 * 255.0 / 625.0);
  CHECK(expected == doctest::Approx(20.17).epsilon(1e-3));
  CHECK(std::abs(psnr(ref, noisy).mean_db - expected) < 0.1);
}

TEST_CASE("psnr decreases monotonically with noise level") {
  const VideoMatrix ref = testing::rank3_video(16, 16, 4);
  double previous = std::numeric_limits<double>::infinity();
  for (double sigma : {5.0, 10.0, 20.0, 40.0}) {
    double mean = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      mean += psnr(ref, add_gaussian(ref, sigma, 1000 + static_cast<std::uint64_t>(trial))).mean_db / 20.0;
    }
    CHECK(mean < previous);
    previous = mean;
  }
}

TEST_CASE("psnr csv format") {
  const auto dir = testing::fresh_temp_dir("psnrcsv");
  PsnrReport r;
  r.per_frame_db = {std::numeric_limits<double>::infinity(), 30.5};
  write_psnr_csv(r, dir / "p.csv");
  std::ifstream in(dir / "p.csv");
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(header == "frame,psnr_db");
  CHECK(row0 == "0,inf");
  CHECK(row1 == "1,30.500000");
}

TEST_CASE("hist_equalize conventions") {
  const FrameGeometry g{4, 4, 8};
  SUBCASE("constant frame maps to 255") {
    const VideoMatrix out = hist_equalize(VideoMatrix(g, Eigen::MatrixXd::Constant(16, 1, 37.0)));
    CHECK((out.data.array() == 255.0).all());
  }
  SUBCASE("two equal levels map to 127 and 255") {
    Eigen::MatrixXd d(16, 1);
    for (int i = 0; i < 16; ++i) d(i) = i < 8 ? 20.0 : 90.0;
    const VideoMatrix out = hist_equalize(VideoMatrix(g, d));
    for (int i = 0; i < 16; ++i) CHECK(out.data(i) == (i < 8 ? 127.0 : 255.0));
  }
  SUBCASE("uniform histogram is unchanged") {
    const FrameGeometry big{16, 32, 8};
    Eigen::MatrixXd d(512, 1);
    for (int i = 0; i < 512; ++i) d(i) = i % 256;
    const VideoMatrix out = hist_equalize(VideoMatrix(big, d));
    CHECK(out.data == d);
  }
}
