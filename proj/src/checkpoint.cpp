#include "srn/trainer.hpp"

#include "srn/config_file.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace srn {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'R', 'N', 'W'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagOptimizer = 1;

template <typename U>
void put(std::vector<unsigned char>& buf, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
        buf.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
}

void put_tensor(std::vector<unsigned char>& buf, const std::string& name, const Tensor<float>& t) {
    detail::require(name.size() <= 0xFFFF, "checkpoint: tensor name too long");
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
    buf.push_back(0); // dtype: f32
    buf.push_back(4); // rank
    const Shape s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
    const std::size_t bytes = static_cast<std::size_t>(t.numel()) * sizeof(float);
    const std::size_t at = buf.size();
    buf.resize(at + bytes);
    std::memcpy(buf.data() + at, t.data(), bytes);
}

Tensor<float> scalar_tensor(double v) {
    return Tensor<float>(Shape{1, 1, 1, 1}, std::vector<float>{static_cast<float>(v)});
}

struct Reader {
    const unsigned char* p;
    std::size_t left;
    const std::string& path;

    void need(std::size_t n) const {
        if (left < n) throw io_error("checkpoint: truncated file " + path);
    }
    template <typename U>
    U get() {
        need(sizeof(U));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += sizeof(U);
        left -= sizeof(U);
        return static_cast<U>(v);
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

} // namespace

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int b = 0; b < 8; ++b) c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::vector<std::pair<std::string, const Tensor<float>*>> records;
    for (const auto& [name, t] : ckpt.weights.tensors) records.emplace_back(name, &t);

    std::vector<std::pair<std::string, Tensor<float>>> owned;
    if (ckpt.opt) {
        for (const auto& [name, t] : ckpt.opt->m) owned.emplace_back("opt.m." + name, t);
        for (const auto& [name, t] : ckpt.opt->v) owned.emplace_back("opt.v." + name, t);
        owned.emplace_back("opt.t", scalar_tensor(static_cast<double>(ckpt.opt->t)));
    }
    owned.emplace_back("meta.epoch", scalar_tensor(static_cast<double>(ckpt.epoch)));
    owned.emplace_back("meta.step", scalar_tensor(static_cast<double>(ckpt.step)));
    for (const auto& [name, t] : owned) records.emplace_back(name, &t);

    std::vector<unsigned char> body;
    for (const auto& [name, t] : records) put_tensor(body, name, *t);

    std::vector<unsigned char> file;
    file.insert(file.end(), kMagic.begin(), kMagic.end());
    put<std::uint16_t>(file, kVersion);
    put<std::uint16_t>(file, ckpt.opt ? kFlagOptimizer : 0);
    put<std::uint32_t>(file, static_cast<std::uint32_t>(records.size()));
    file.insert(file.end(), body.begin(), body.end());
    put<std::uint32_t>(file, crc32_ieee(body.data(), body.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("checkpoint: cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    if (!out) throw io_error("checkpoint: write failed for " + path);

    write_config_sidecar(ckpt.model_cfg, ckpt.train_cfg, path + ".json");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("checkpoint: cannot open " + path);
    std::vector<unsigned char> file((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (file.size() < 16) throw io_error("checkpoint: truncated file " + path);
    if (std::memcmp(file.data(), kMagic.data(), 4) != 0)
        throw io_error("checkpoint: bad magic in " + path);

    Reader r{file.data() + 4, file.size() - 8, path};
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion)
        throw io_error("checkpoint: unsupported version " + std::to_string(version) + " in " + path);
    const auto flags = r.get<std::uint16_t>();
    const auto count = r.get<std::uint32_t>();

    const unsigned char* body = r.p;
    std::map<std::string, Tensor<float>> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.get<std::uint16_t>();
        const std::string name = r.get_string(name_len);
        const auto dtype = r.get<std::uint8_t>();
        if (dtype != 0) throw io_error("checkpoint: unsupported dtype in " + path);
        const auto rank = r.get<std::uint8_t>();
        if (rank != 4) throw io_error("checkpoint: unsupported rank in " + path);
        Shape s;
        s.n = static_cast<int>(r.get<std::uint32_t>());
        s.c = static_cast<int>(r.get<std::uint32_t>());
        s.h = static_cast<int>(r.get<std::uint32_t>());
        s.w = static_cast<int>(r.get<std::uint32_t>());
        if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
            throw io_error("checkpoint: bad tensor shape in " + path);
        const std::size_t bytes = static_cast<std::size_t>(s.numel()) * sizeof(float);
        r.need(bytes);
        std::vector<float> data(static_cast<std::size_t>(s.numel()));
        std::memcpy(data.data(), r.p, bytes);
        r.p += bytes;
        r.left -= bytes;
        if (!tensors.emplace(name, Tensor<float>(s, std::move(data))).second)
            throw io_error("checkpoint: duplicate tensor name " + name + " in " + path);
    }
    const std::size_t body_size = static_cast<std::size_t>(r.p - body);
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, file.data() + file.size() - 4, 4);
    if (crc32_ieee(body, body_size) != stored_crc)
        throw io_error("checkpoint: checksum mismatch in " + path);

    Checkpoint ckpt;
    auto take_scalar = [&](const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw io_error("checkpoint: missing " + name + " in " + path);
        const double v = it->second.data()[0];
        tensors.erase(it);
        return static_cast<std::int64_t>(v);
    };
    ckpt.epoch = take_scalar("meta.epoch");
    ckpt.step = take_scalar("meta.step");
    if (flags & kFlagOptimizer) {
        AdamState<float> opt;
        opt.t = take_scalar("opt.t");
        for (auto it = tensors.begin(); it != tensors.end();) {
            if (it->first.rfind("opt.m.", 0) == 0) {
                opt.m.emplace(it->first.substr(6), std::move(it->second));
                it = tensors.erase(it);
            } else if (it->first.rfind("opt.v.", 0) == 0) {
                opt.v.emplace(it->first.substr(6), std::move(it->second));
                it = tensors.erase(it);
            } else {
                ++it;
            }
        }
        ckpt.opt = std::move(opt);
    }
    ckpt.weights.tensors = std::move(tensors);

    const auto [model_cfg, train_cfg] = read_config_sidecar(path + ".json");
    ckpt.model_cfg = model_cfg;
    ckpt.train_cfg = train_cfg;
    return ckpt;
}

} // namespace srn
