#include "srn/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace srn {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw io_error("ppm: malformed header in " + path);
    long v = std::strtol(tok.c_str(), nullptr, 10);
    if (v < 1 || v > 1 << 20) throw io_error("ppm: malformed header in " + path);
    return static_cast<int>(v);
}

} // namespace

Tensor<float> read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("ppm: cannot open " + path);
    if (next_token(in) != "P6") throw io_error("ppm: malformed header in " + path + " (expected P6)");
    const int w = parse_dim(next_token(in), path);
    const int h = parse_dim(next_token(in), path);
    const std::string maxval = next_token(in);
    if (maxval.empty() || maxval.find_first_not_of("0123456789") != std::string::npos)
        throw io_error("ppm: malformed header in " + path);
    if (maxval != "255") throw io_error("ppm: unsupported maxval " + maxval + " in " + path);
    // next_token consumed exactly one whitespace byte after the maxval.
    std::vector<unsigned char> bytes(static_cast<std::size_t>(3) * w * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw io_error("ppm: truncated payload in " + path);
    std::vector<float> data(bytes.size());
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                data[static_cast<std::size_t>(c * plane + y * static_cast<std::int64_t>(w) + x)] =
                    bytes[static_cast<std::size_t>((y * static_cast<std::int64_t>(w) + x) * 3 + c)] / 255.0f;
    return Tensor<float>(Shape{1, 3, h, w}, std::move(data));
}

void write_image(const Tensor<float>& image, const std::string& path) {
    detail::require(image.n() == 1 && image.c() == 3,
                    "write_image: expected 1x3xHxW, got " + image.shape().str());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("ppm: cannot open " + path + " for writing");
    out << "P6\n" << image.w() << " " << image.h() << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<std::size_t>(3) * image.h() * image.w());
    std::size_t i = 0;
    for (int y = 0; y < image.h(); ++y)
        for (int x = 0; x < image.w(); ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::min(1.0f, std::max(0.0f, image.at(0, c, y, x)));
                bytes[i++] = static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
            }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("ppm: write failed for " + path);
}

} // namespace srn
