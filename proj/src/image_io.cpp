#include "percept/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace percept {

namespace {

bool has_suffix(const std::string& s, const char* suffix) {
    const std::size_t n = std::string(suffix).size();
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
std::string next_token(std::istream& is) {
    std::string tok;
    int ch;
    while ((ch = is.get()) != EOF) {
        if (ch == '#') {
            while ((ch = is.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok += static_cast<char>(ch);
    }
    return tok;
}

Tensor load_pnm(const std::string& path, int channels) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageError("cannot open " + path);
    std::string magic = next_token(is);
    const int w = std::stoi(next_token(is));
    const int h = std::stoi(next_token(is));
    const int maxval = std::stoi(next_token(is));
    if (w <= 0 || h <= 0) throw ImageError(path + ": bad dimensions");
    if (maxval <= 0 || maxval > 255) throw ImageError(path + ": only 8-bit PNM supported");
    // Header ends with exactly one whitespace byte, already consumed by next_token.
    const std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw ImageError(path + ": truncated pixel data");
    std::vector<double> pix(n);
    const double inv = 1.0 / maxval;
    for (std::size_t i = 0; i < n; ++i) pix[i] = raw[i] * inv;
    return Tensor({h, w, channels}, std::move(pix));
}

void save_pnm(const std::string& path, const Tensor& pixels, int channels, const char* magic) {
    const int h = pixels.shape()[0], w = pixels.shape()[1];
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ImageError("cannot open " + path + " for writing");
    os << magic << "\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(pixels.data().size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(pixels.data()[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw ImageError("short write to " + path);
    (void)channels;
}

}  // namespace

Tensor load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ImageError("cannot open " + path);
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '5') return load_pnm(path, 1);
    if (magic[0] == 'P' && magic[1] == '6') return load_pnm(path, 3);
    if (magic[0] == 'P' && magic[1] == 'T' && magic[2] == 'N' && magic[3] == 'S') {
        Tensor t = load_tensor(path);
        if (t.shape().size() != 3 || (t.shape()[2] != 1 && t.shape()[2] != 3))
            throw ImageError(path + ": PTNS image must be [h x w x 1|3], got " + shape_str(t.shape()));
        for (double v : t.data())
            if (!(v >= 0.0 && v <= 1.0)) throw ImageError(path + ": pixel values outside [0,1]");
        return t;
    }
    throw ImageError(path + ": unsupported image format (want P5/P6 PNM or PTNS)");
}

void save_image(const std::string& path, const Tensor& pixels) {
    if (pixels.shape().size() != 3)
        throw ImageError("save_image: pixels must be [h x w x c], got " + shape_str(pixels.shape()));
    const int c = pixels.shape()[2];
    if (has_suffix(path, ".pgm")) {
        if (c != 1) throw ImageError("save_image: PGM requires 1 channel, got " + std::to_string(c));
        save_pnm(path, pixels, 1, "P5");
    } else if (has_suffix(path, ".ppm")) {
        if (c != 3) throw ImageError("save_image: PPM requires 3 channels, got " + std::to_string(c));
        save_pnm(path, pixels, 3, "P6");
    } else {
        if (c != 1 && c != 3) throw ImageError("save_image: channel count must be 1 or 3");
        save_tensor(path, pixels);
    }
}

}  // namespace percept
