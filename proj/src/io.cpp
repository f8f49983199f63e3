#include "iiclab/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace iiclab {

namespace {

constexpr char kMagic[4] = {'I', 'I', 'C', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const unsigned char* at;
    const unsigned char* end;

    void need(std::size_t k, const char* what) {
        if (std::size_t(end - at) < k)
            throw std::runtime_error(std::string("sample file truncated at ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(at[i]) << (8 * i);
        at += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(at[i]) << (8 * i);
        at += 8;
        return v;
    }
    double f64(const char* what) {
        std::uint64_t bits = u64(what);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

}  // namespace

std::uint64_t fnv1a_bytes(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::string data = read_file_bytes(path);
    return fnv1a_bytes(data.data(), data.size());
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[std::size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("fmt_double: conversion failed");
    return std::string(buf, ptr);
}

void atomic_write_bytes(const std::filesystem::path& path, const void* data, std::size_t len) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(static_cast<const char*>(data), std::streamsize(len));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    atomic_write_bytes(path, text.data(), text.size());
}

void write_sample(const PercolationSample& sample, const std::filesystem::path& path) {
    std::string payload;
    payload.reserve(56 + 8 * sample.words.size());
    payload.append(kMagic, 4);
    put_u32(payload, kVersion);
    put_u64(payload, std::uint64_t(std::int64_t(sample.region.n)));
    put_u64(payload, std::uint64_t(std::int64_t(sample.region.offset.x)));
    put_u64(payload, std::uint64_t(std::int64_t(sample.region.offset.y)));
    put_f64(payload, sample.p);
    put_u64(payload, sample.seed);
    put_u64(payload, sample.words.size());
    for (std::uint64_t w : sample.words) put_u64(payload, w);
    atomic_write_bytes(path, payload.data(), payload.size());

    nlohmann::json side;
    side["format"] = "iiclab-sample";
    side["version"] = kVersion;
    side["n"] = sample.region.n;
    side["offset"] = {sample.region.offset.x, sample.region.offset.y};
    side["p"] = sample.p;
    side["seed"] = sample.seed;
    side["edge_count"] = sample.region.edge_count();
    side["open_count"] = sample.open_count();
    side["words"] = sample.words.size();
    side["payload_fnv64"] = hex64(fnv1a_bytes(payload.data(), payload.size()));
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    atomic_write_text(sidecar, side.dump(2) + "\n");
}

PercolationSample read_sample(const std::filesystem::path& path) {
    std::string data = read_file_bytes(path);
    Reader r{reinterpret_cast<const unsigned char*>(data.data()),
             reinterpret_cast<const unsigned char*>(data.data()) + data.size()};
    r.need(4, "magic");
    if (std::memcmp(r.at, kMagic, 4) != 0)
        throw std::runtime_error("sample file: bad magic in " + path.string());
    r.at += 4;
    std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw std::runtime_error("sample file: unsupported version " + std::to_string(version));
    std::int64_t n = std::int64_t(r.u64("n"));
    std::int64_t offx = std::int64_t(r.u64("offset"));
    std::int64_t offy = std::int64_t(r.u64("offset"));
    double p = r.f64("p");
    std::uint64_t seed = r.u64("seed");
    std::uint64_t words = r.u64("word count");

    if (n < 1 || n > (1 << 20)) throw std::runtime_error("sample file: half-width out of range");
    if (offx < INT32_MIN || offx > INT32_MAX || offy < INT32_MIN || offy > INT32_MAX)
        throw std::runtime_error("sample file: offset out of range");
    if (!(p >= 0.0 && p <= 1.0)) throw std::runtime_error("sample file: p outside [0,1]");

    PercolationSample s;
    s.region = BoxRegion(int(n), Vertex{int(offx), int(offy)});
    s.p = p;
    s.seed = seed;
    std::uint64_t expect = std::uint64_t((s.region.edge_count() + 63) / 64);
    if (words != expect)
        throw std::runtime_error("sample file: word count does not match the region");
    if (std::size_t(r.end - r.at) != 8 * words)
        throw std::runtime_error("sample file: payload size mismatch");
    s.words.resize(words);
    for (std::uint64_t i = 0; i < words; ++i) s.words[i] = r.u64("edge words");
    return s;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("CsvTable: empty header");
}

void CsvTable::row(std::vector<std::string> cells) {
    if (cells.size() != header_.size())
        throw std::invalid_argument("CsvTable: row width does not match header");
    rows_.push_back(std::move(cells));
}

namespace {
void append_csv_cell(std::string& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
        out += cell;
        return;
    }
    out += '"';
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}
}  // namespace

std::string CsvTable::render() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            append_csv_cell(out, cells[i]);
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void CsvTable::save(const std::filesystem::path& path) const {
    atomic_write_text(path, render());
}

}  // namespace iiclab
