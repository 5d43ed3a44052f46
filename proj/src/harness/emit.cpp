#include "emit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "gnlab/errors.hpp"

namespace gnlab {

std::string fmt_full(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

std::string fmt_fixed(double v, int decimals) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, v);
    return buffer;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

DirLock::DirLock(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    path_ = (std::filesystem::path(out_dir) / ".gnlab.lock").string();
    // O_EXCL-style create: fails if another command holds the directory.
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr) {
        raise(ErrorKind::config,
              "output directory is locked by another run (found " + path_ + ")");
    }
    std::fclose(f);
}

DirLock::~DirLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

CsvFile::CsvFile(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
    require(out_.good(), ErrorKind::io, "cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i) {
        out_ << header[i] << (i + 1 == header.size() ? "\n" : ",");
    }
}

void CsvFile::row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, ErrorKind::invalid_argument,
            path_ + ": csv row width mismatch");
    for (size_t i = 0; i < cells.size(); ++i) {
        out_ << cells[i] << (i + 1 == cells.size() ? "\n" : ",");
    }
}

void CsvFile::close() {
    out_.flush();
    require(out_.good(), ErrorKind::io, path_ + ": csv write failed");
    out_.close();
}

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::line(double x1, double y1, double x2, double y2,
                     const std::string& color, double stroke_width) {
    body_ += "<line x1=\"" + fmt_fixed(x1, 3) + "\" y1=\"" + fmt_fixed(y1, 3) +
             "\" x2=\"" + fmt_fixed(x2, 3) + "\" y2=\"" + fmt_fixed(y2, 3) +
             "\" stroke=\"" + color + "\" stroke-width=\"" +
             fmt_fixed(stroke_width, 2) + "\"/>\n";
}

void SvgCanvas::arrow(double x1, double y1, double x2, double y2,
                      const std::string& color, double stroke_width) {
    line(x1, y1, x2, y2, color, stroke_width);
    // Arrowhead: two short strokes at ~30 degrees off the shaft.
    const double dx = x2 - x1, dy = y2 - y1;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-9) {
        return;
    }
    const double ux = dx / len, uy = dy / len;
    const double head = std::min(6.0, 0.3 * len);
    const double c = 0.866, s = 0.5;
    line(x2, y2, x2 - head * (c * ux - s * uy), y2 - head * (s * ux + c * uy), color,
         stroke_width);
    line(x2, y2, x2 - head * (c * ux + s * uy), y2 - head * (-s * ux + c * uy), color,
         stroke_width);
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + fmt_fixed(cx, 3) + "\" cy=\"" + fmt_fixed(cy, 3) +
             "\" r=\"" + fmt_fixed(r, 3) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + fmt_fixed(x, 3) + "\" y=\"" + fmt_fixed(y, 3) +
             "\" width=\"" + fmt_fixed(w, 3) + "\" height=\"" + fmt_fixed(h, 3) +
             "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, int font_size) {
    body_ += "<text x=\"" + fmt_fixed(x, 3) + "\" y=\"" + fmt_fixed(y, 3) +
             "\" font-size=\"" + std::to_string(font_size) +
             "\" font-family=\"monospace\">" + content + "</text>\n";
}

void SvgCanvas::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_fixed(width_, 0)
        << "\" height=\"" << fmt_fixed(height_, 0) << "\" viewBox=\"0 0 "
        << fmt_fixed(width_, 0) << " " << fmt_fixed(height_, 0) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_ << "</svg>\n";
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

void write_manifest(const std::string& out_dir, const std::vector<std::string>& files) {
    std::vector<std::string> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.txt",
                      std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write manifest in " + out_dir);
    for (const std::string& name : sorted) {
        const std::string bytes =
            read_file_bytes((std::filesystem::path(out_dir) / name).string());
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        out << name << " " << bytes.size() << " " << hash << "\n";
    }
    require(out.good(), ErrorKind::io, "manifest write failed in " + out_dir);
}

}  // namespace gnlab
