// File formats: LIBSVM sparse datasets (text, 1-based "idx:val" pairs) and
// PGM images (P2 ASCII / P5 binary, maxval up to 65535).
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trssn/types.hpp"

namespace trssn {

struct LibsvmData {
  SpMat A;  // N x n, one row per sample
  Vec b;    // labels mapped to {-1, +1}
};

// Reads "label idx:val idx:val ..." lines. Labels > 0 map to +1, the rest to
// -1; indices are 1-based. Malformed input is a hard error naming the line.
inline LibsvmData read_libsvm(std::istream& in) {
  auto fail = [](long lineno, const std::string& what) {
    throw std::runtime_error("libsvm: line " + std::to_string(lineno) + ": " + what);
  };
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> labels;
  std::string line;
  long lineno = 0;
  Index n = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::size_t pos = 0;
    double label = 0.0;
    try {
      label = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size()) fail(lineno, "bad label '" + tok + "'");
    Index row = Index(labels.size());
    while (ls >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        fail(lineno, "expected idx:val, got '" + tok + "'");
      long idx = 0;
      double val = 0.0;
      try {
        idx = std::stol(tok.substr(0, colon), &pos);
        if (pos != colon) fail(lineno, "bad index in '" + tok + "'");
        val = std::stod(tok.substr(colon + 1), &pos);
        if (pos != tok.size() - colon - 1) fail(lineno, "bad value in '" + tok + "'");
      } catch (const std::runtime_error&) {
        throw;
      } catch (const std::exception&) {
        fail(lineno, "bad feature '" + tok + "'");
      }
      if (idx < 1) fail(lineno, "index " + std::to_string(idx) + " is not 1-based");
      trips.emplace_back(row, Index(idx - 1), val);
      n = std::max(n, Index(idx));
    }
    labels.push_back(label > 0.0 ? 1.0 : -1.0);
  }
  LibsvmData d;
  d.A.resize(Index(labels.size()), n);
  d.A.setFromTriplets(trips.begin(), trips.end());
  d.b = Eigen::Map<const Vec>(labels.data(), Index(labels.size()));
  return d;
}

inline LibsvmData read_libsvm_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("libsvm: cannot open " + path);
  return read_libsvm(f);
}

struct PgmImage {
  int width = 0;
  int height = 0;
  Vec pixels;  // row-major, normalized to [0,1]
};

inline PgmImage read_pgm(std::istream& in) {
  auto fail = [](const std::string& what) { throw std::runtime_error("pgm: " + what); };
  // header tokens may be separated by whitespace and '#' comments
  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(char(ch));
    }
    return tok;
  };
  std::string magic = next_token();
  if (magic != "P2" && magic != "P5") fail("unsupported magic '" + magic + "'");
  auto num = [&](const std::string& what) {
    std::string tok = next_token();
    std::size_t pos = 0;
    long v = -1;
    try {
      v = std::stol(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size() || v < 0) fail("bad " + what + " '" + tok + "'");
    return v;
  };
  long w = num("width"), h = num("height"), maxval = num("maxval");
  if (w < 1 || h < 1) fail("empty image");
  if (maxval < 1 || maxval > 65535) fail("maxval " + std::to_string(maxval) + " out of range");
  PgmImage img;
  img.width = int(w);
  img.height = int(h);
  img.pixels.resize(w * h);
  if (magic == "P2") {
    for (Index i = 0; i < img.pixels.size(); ++i) {
      long v = num("pixel");
      if (v > maxval) fail("pixel value " + std::to_string(v) + " exceeds maxval");
      img.pixels(i) = double(v) / double(maxval);
    }
  } else {
    // single whitespace byte after maxval, then raw samples
    int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(std::size_t(w) * std::size_t(h) * std::size_t(bytes));
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (in.gcount() != std::streamsize(buf.size())) fail("unexpected end of pixel data");
    for (Index i = 0; i < img.pixels.size(); ++i) {
      long v = bytes == 1 ? long(buf[std::size_t(i)])
                          : long(buf[2 * std::size_t(i)]) << 8 | long(buf[2 * std::size_t(i) + 1]);
      if (v > maxval) fail("pixel value " + std::to_string(v) + " exceeds maxval");
      img.pixels(i) = double(v) / double(maxval);
    }
  }
  return img;
}

inline PgmImage read_pgm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pgm: cannot open " + path);
  return read_pgm(f);
}

// 8-bit binary PGM; values clamped to [0,1] and quantized to 0..255.
inline void write_pgm(std::ostream& out, const Vec& pixels, int height, int width) {
  if (pixels.size() != Index(height) * Index(width))
    throw std::invalid_argument("pgm: pixel count does not match dimensions");
  out << "P5\n" << width << " " << height << "\n255\n";
  for (Index i = 0; i < pixels.size(); ++i) {
    double v = std::min(1.0, std::max(0.0, pixels(i)));
    out.put(char(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
}

inline void write_pgm_file(const std::string& path, const Vec& pixels, int height, int width) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pgm: cannot open " + path + " for writing");
  write_pgm(f, pixels, height, width);
  if (!f) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace trssn
