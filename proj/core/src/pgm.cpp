#include "fseg/pgm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fseg {

namespace {

void write_p5(const std::vector<uint8_t>& bytes, int w, int h, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("pgm: cannot open for writing: " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    if (!f) throw std::runtime_error("pgm: write failed: " + path);
}

// reads the header token by token, skipping '#' comments
int next_int(std::istream& in, const std::string& path) {
    for (;;) {
        int c = in.peek();
        if (c == EOF) throw std::runtime_error("pgm: truncated header: " + path);
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        int value = 0;
        if (!(in >> value)) throw std::runtime_error("pgm: malformed header: " + path);
        return value;
    }
}

std::vector<uint8_t> read_p5(const std::string& path, int& w, int& h) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("pgm: cannot open: " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '5')
        throw std::runtime_error("pgm: unsupported format (want P5): " + path);
    w = next_int(f, path);
    h = next_int(f, path);
    const int maxval = next_int(f, path);
    if (w <= 0 || h <= 0) throw std::runtime_error("pgm: bad dimensions: " + path);
    if (maxval != 255) throw std::runtime_error("pgm: unsupported maxval (want 255): " + path);
    f.get(); // single whitespace after maxval
    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<long>(bytes.size()));
    if (f.gcount() != static_cast<long>(bytes.size()))
        throw std::runtime_error("pgm: truncated pixel data: " + path);
    return bytes;
}

} // namespace

void pgm_write(const Image2D& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        const float v = img.data[i];
        if (!(v >= 0.0f && v <= 255.0f))
            throw std::invalid_argument("pgm: intensity out of [0,255]");
        bytes[i] = static_cast<uint8_t>(std::lround(v));
    }
    write_p5(bytes, img.width, img.height, path);
}

void pgm_write(const BinaryMask& mask, const std::string& path) {
    std::vector<uint8_t> bytes(mask.size());
    for (size_t i = 0; i < mask.data.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    write_p5(bytes, mask.width, mask.height, path);
}

Image2D pgm_read(const std::string& path) {
    int w = 0, h = 0;
    const std::vector<uint8_t> bytes = read_p5(path, w, h);
    Image2D img(w, h);
    for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = static_cast<float>(bytes[i]);
    return img;
}

BinaryMask pgm_read_mask(const std::string& path) {
    int w = 0, h = 0;
    const std::vector<uint8_t> bytes = read_p5(path, w, h);
    BinaryMask mask(w, h);
    for (size_t i = 0; i < bytes.size(); ++i) mask.data[i] = bytes[i] >= 128 ? 1 : 0;
    return mask;
}

} // namespace fseg
