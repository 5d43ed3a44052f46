#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gnlab/attribution_io.hpp"
#include "gnlab/tensor.hpp"

namespace gnlab {

// Full-precision (round-trippable) decimal form of a double.
std::string fmt_full(double v);
// Fixed-decimal form used in summary tables and SVG coordinates.
std::string fmt_fixed(double v, int decimals = 6);

uint64_t fnv1a64(const std::string& bytes);
std::string read_file_bytes(const std::string& path);

// Exclusive per-output-directory lock; held for the duration of a command.
class DirLock {
public:
    explicit DirLock(const std::string& out_dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
};

class CsvFile {
public:
    CsvFile(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    size_t columns_;
    std::string path_;
};

// Minimal static-SVG canvas; all coordinates formatted with fmt_fixed so the
// output is deterministic.
class SvgCanvas {
public:
    SvgCanvas(double width, double height);
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double stroke_width = 1.0);
    void arrow(double x1, double y1, double x2, double y2, const std::string& color,
               double stroke_width = 1.0);
    void circle(double cx, double cy, double r, const std::string& fill);
    void rect(double x, double y, double w, double h, const std::string& fill);
    void text(double x, double y, const std::string& content, int font_size = 12);
    void write(const std::string& path) const;

private:
    double width_, height_;
    std::string body_;
};

// manifest.txt: sorted relative paths with byte size and FNV-1a hash.
void write_manifest(const std::string& out_dir, const std::vector<std::string>& files);

}  // namespace gnlab
