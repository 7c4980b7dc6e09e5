#include "reld/video_matrix.hpp"

#include "reld/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

namespace reld {

namespace fs = std::filesystem;

void FrameGeometry::validate() const {
  if (height <= 0 || width <= 0) {
    throw ArgumentError("frame geometry must have positive height and width");
  }
  if (bit_depth != 8) {
    throw ArgumentError("only 8-bit frames are supported");
  }
}

VideoMatrix::VideoMatrix(FrameGeometry g, Eigen::MatrixXd d) : geometry(g), data(std::move(d)) {
  geometry.validate();
  if (data.rows() != geometry.pixels()) {
    throw ShapeError("video matrix rows (" + std::to_string(data.rows()) +
                     ") do not match frame size (" + std::to_string(geometry.pixels()) + ")");
  }
}

Eigen::MatrixXd VideoMatrix::frame(Eigen::Index k) const { return devectorize(data.col(k), geometry); }

void VideoMatrix::set_frame(Eigen::Index k, const Eigen::MatrixXd& image) {
  if (image.rows() != geometry.height || image.cols() != geometry.width) {
    throw ShapeError("frame does not match sequence geometry");
  }
  data.col(k) = vectorize(image);
}

VideoMatrix VideoMatrix::slice(Eigen::Index first, Eigen::Index count) const {
  return VideoMatrix(geometry, data.middleCols(first, count));
}

Eigen::VectorXd vectorize(const Eigen::MatrixXd& image) {
  Eigen::VectorXd out(image.size());
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      out(i++) = image(r, c);
    }
  }
  return out;
}

Eigen::MatrixXd devectorize(const Eigen::Ref<const Eigen::VectorXd>& column, const FrameGeometry& g) {
  if (column.size() != g.pixels()) {
    throw ShapeError("column length does not match frame geometry");
  }
  Eigen::MatrixXd image(g.height, g.width);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < g.height; ++r) {
    for (Eigen::Index c = 0; c < g.width; ++c) {
      image(r, c) = column(i++);
    }
  }
  return image;
}

// --- PGM ---------------------------------------------------------------------

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in, const fs::path& file) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw IoError("truncated PGM header in " + file.string());
  return token;
}

int parse_positive(const std::string& token, const fs::path& file) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size() || v <= 0) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad PGM header field '" + token + "' in " + file.string());
  }
}

}  // namespace

GrayImage read_pgm(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  if (next_token(in, file) != "P5") throw IoError("not a binary PGM (P5): " + file.string());
  GrayImage img;
  img.width = parse_positive(next_token(in, file), file);
  img.height = parse_positive(next_token(in, file), file);
  img.maxval = parse_positive(next_token(in, file), file);
  if (img.maxval > 255) throw IoError("16-bit PGM is not supported: " + file.string());
  // next_token consumed exactly one whitespace byte after maxval.
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw IoError("truncated PGM pixel data in " + file.string());
  }
  return img;
}

void write_pgm(const fs::path& file, const GrayImage& image) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed for " + file.string());
}

std::string frame_filename(std::size_t k) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "frame_%05zu.pgm", k);
  return buf.data();
}

VideoMatrix load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("frame directory does not exist: " + dir.string());

  static const std::regex pattern(R"(frame_(\d{5,})\.pgm)");
  std::vector<std::pair<unsigned long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, pattern)) files.emplace_back(std::stoull(m[1].str()), entry.path());
  }
  if (files.empty()) throw IoError("no frame_NNNNN.pgm files in " + dir.string());
  std::sort(files.begin(), files.end());

  FrameGeometry geometry;
  Eigen::MatrixXd data;
  for (std::size_t k = 0; k < files.size(); ++k) {
    const GrayImage img = read_pgm(files[k].second);
    if (k == 0) {
      geometry.height = img.height;
      geometry.width = img.width;
      data.resize(geometry.pixels(), static_cast<Eigen::Index>(files.size()));
    } else if (img.height != geometry.height || img.width != geometry.width) {
      throw ShapeError("frame " + files[k].second.filename().string() + " is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", expected " + std::to_string(geometry.width) + "x" +
                       std::to_string(geometry.height));
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = img.pixels[i];
    }
  }
  return VideoMatrix(geometry, std::move(data));
}

double quantize_pixel(double v, double max_value) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(std::round(v), 0.0, max_value);
}

void store_frames(const VideoMatrix& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  const double peak = video.geometry.pixel_range_max();
  GrayImage img;
  img.height = static_cast<int>(video.geometry.height);
  img.width = static_cast<int>(video.geometry.width);
  img.maxval = static_cast<int>(peak);
  img.pixels.resize(static_cast<std::size_t>(video.pixels()));
  for (Eigen::Index k = 0; k < video.frames(); ++k) {
    for (Eigen::Index i = 0; i < video.pixels(); ++i) {
      img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(quantize_pixel(video.data(i, k), peak));
    }
    write_pgm(dir / frame_filename(static_cast<std::size_t>(k)), img);
  }
}

// --- Metrics -----------------------------------------------------------------

PsnrReport psnr(const VideoMatrix& reference, const VideoMatrix& test) {
  if (reference.geometry != test.geometry || reference.frames() != test.frames()) {
    throw ShapeError("psnr: reference and test sequences differ in shape");
  }
  const double peak = reference.geometry.pixel_range_max();
  const double n = static_cast<double>(reference.pixels());
  PsnrReport report;
  report.per_frame_db.reserve(static_cast<std::size_t>(reference.frames()));
  double sum = 0.0;
  for (Eigen::Index k = 0; k < reference.frames(); ++k) {
    const double mse = (reference.data.col(k) - test.data.col(k)).squaredNorm() / n;
    if (mse == 0.0) {
      report.per_frame_db.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    const double db = 10.0 * std::log10(peak * peak / mse);
    report.per_frame_db.push_back(db);
    sum += db;
    ++report.finite_frames;
  }
  if (report.finite_frames > 0) report.mean_db = sum / static_cast<double>(report.finite_frames);
  return report;
}

std::string format_db(double db) {
  if (std::isinf(db)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << db;
  return os.str();
}

void write_psnr_csv(const PsnrReport& report, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "frame,psnr_db\n";
  for (std::size_t k = 0; k < report.per_frame_db.size(); ++k) {
    out << k << ',' << format_db(report.per_frame_db[k]) << '\n';
  }
  if (!out) throw IoError("write failed for " + file.string());
}

VideoMatrix hist_equalize(const VideoMatrix& video) {
  constexpr int kLevels = 256;
  VideoMatrix out = video;
  const auto n = video.pixels();
  for (Eigen::Index k = 0; k < video.frames(); ++k) {
    std::array<long long, kLevels> hist{};
    std::vector<int> levels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const int v = static_cast<int>(quantize_pixel(video.data(i, k), kLevels - 1));
      levels[static_cast<std::size_t>(i)] = v;
      ++hist[static_cast<std::size_t>(v)];
    }
    std::array<long long, kLevels> map{};
    long long cumulative = 0;
    for (int v = 0; v < kLevels; ++v) {
      cumulative += hist[static_cast<std::size_t>(v)];
      map[static_cast<std::size_t>(v)] = (static_cast<long long>(kLevels - 1) * cumulative) / n;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out.data(i, k) = static_cast<double>(map[static_cast<std::size_t>(levels[static_cast<std::size_t>(i)])]);
    }
  }
  return out;
}

}  // namespace reld
