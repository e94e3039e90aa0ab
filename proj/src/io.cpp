#include "piano/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace piano {

namespace {

void put_u16(std::ostream& os, std::uint16_t x) {
    unsigned char b[2] = {static_cast<unsigned char>(x & 0xff),
                          static_cast<unsigned char>(x >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float x) {
    std::uint32_t u;
    std::memcpy(&u, &x, 4);
    put_u32(os, u);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

float get_f32(std::istream& is) {
    std::uint32_t u = get_u32(is);
    float x;
    std::memcpy(&x, &u, 4);
    return x;
}

void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const std::uint32_t len = get_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return is;
}

} // namespace

void write_gfs1(const std::filesystem::path& path, const FrameSequence& seq, GfsDtype dtype) {
    seq.validate();
    std::ofstream os = open_out(path);
    os.write("GFS1", 4);
    put_u16(os, 1);
    put_u32(os, static_cast<std::uint32_t>(seq.length()));
    put_u32(os, static_cast<std::uint32_t>(seq.channel_count()));
    put_u32(os, static_cast<std::uint32_t>(seq.height()));
    put_u32(os, static_cast<std::uint32_t>(seq.width()));
    for (int c = 0; c < seq.channel_count(); ++c)
        put_string(os, c < static_cast<int>(seq.channel_labels.size())
                           ? seq.channel_labels[c]
                           : "ch" + std::to_string(c));
    os.put(static_cast<char>(dtype));
    for (const Frame& fr : seq.frames)
        for (const ScalarField& ch : fr.channels)
            for (double v : ch.values)
                dtype == GfsDtype::F64 ? put_f64(os, v) : put_f32(os, static_cast<float>(v));
    if (!os) throw IoError("write failed: " + path.string());
}

namespace {

FrameSequence read_gfs1_impl(const std::filesystem::path& path, GfsDtype* dtype_out) {
    std::ifstream is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GFS1", 4) != 0)
        throw IoError("not a GFS1 file: " + path.string());
    const std::uint16_t version = get_u16(is);
    if (version != 1) throw IoError("unsupported GFS1 version");
    const std::uint32_t t = get_u32(is), c = get_u32(is), h = get_u32(is), w = get_u32(is);
    FrameSequence seq;
    for (std::uint32_t i = 0; i < c; ++i) seq.channel_labels.push_back(get_string(is));
    const int tag = is.get();
    if (tag != 0 && tag != 1) throw IoError("bad GFS1 dtype tag");
    if (dtype_out) *dtype_out = static_cast<GfsDtype>(tag);
    for (std::uint32_t k = 0; k < t; ++k) {
        Frame fr;
        for (std::uint32_t ic = 0; ic < c; ++ic) {
            ScalarField f(static_cast<int>(h), static_cast<int>(w));
            for (double& v : f.values)
                v = tag == 1 ? get_f64(is) : static_cast<double>(get_f32(is));
            fr.channels.push_back(std::move(f));
        }
        seq.frames.push_back(std::move(fr));
        seq.timestamps.push_back(static_cast<std::int64_t>(k));
    }
    if (!is) throw IoError("truncated GFS1 file: " + path.string());
    return seq;
}

} // namespace

FrameSequence read_gfs1(const std::filesystem::path& path) {
    return read_gfs1_impl(path, nullptr);
}

GfsDtype read_gfs1_dtype(const std::filesystem::path& path) {
    GfsDtype d = GfsDtype::F64;
    read_gfs1_impl(path, &d);
    return d;
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::map<std::string, Tensor4>& tensors) {
    std::ofstream os = open_out(path);
    os.write("NTC1", 4);
    put_u16(os, 1);
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_string(os, name);
        put_u32(os, static_cast<std::uint32_t>(t.n));
        put_u32(os, static_cast<std::uint32_t>(t.c));
        put_u32(os, static_cast<std::uint32_t>(t.h));
        put_u32(os, static_cast<std::uint32_t>(t.w));
        os.put(static_cast<char>(1));
        for (double v : t.v) put_f64(os, v);
    }
    if (!os) throw IoError("write failed: " + path.string());
}

std::map<std::string, Tensor4> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "NTC1", 4) != 0)
        throw IoError("not a checkpoint file: " + path.string());
    if (get_u16(is) != 1) throw IoError("unsupported checkpoint version");
    const std::uint32_t count = get_u32(is);
    std::map<std::string, Tensor4> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = get_string(is);
        const int n = static_cast<int>(get_u32(is));
        const int c = static_cast<int>(get_u32(is));
        const int h = static_cast<int>(get_u32(is));
        const int w = static_cast<int>(get_u32(is));
        if (is.get() != 1) throw IoError("unsupported checkpoint dtype");
        Tensor4 t(n, c, h, w);
        for (double& v : t.v) v = get_f64(is);
        out[name] = std::move(t);
    }
    if (!is) throw IoError("truncated checkpoint: " + path.string());
    return out;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    auto put_row = [&os](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    };
    put_row(header);
    for (const auto& row : rows) put_row(row);
    if (!os) throw IoError("write failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const ScalarField& f, double lo, double hi) {
    std::ofstream os = open_out(path);
    os << "P5\n" << f.width << " " << f.height << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (double v : f.values) {
        double t = (v - lo) / span;
        t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
        os.put(static_cast<char>(static_cast<int>(t * 255.0 + 0.5)));
    }
    if (!os) throw IoError("write failed: " + path.string());
}

} // namespace piano
