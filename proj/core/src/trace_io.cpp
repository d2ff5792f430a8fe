// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#include "xtrim/trace_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace xtrim {

void AttnTrace::validate() const {
    if (layers.empty()) throw ShapeError("trace must contain at least one layer");
    for (const auto& layer : layers) {
        if (layer.heads() != heads() || layer.queries() != queries() ||
            layer.features() != features()) {
            throw ShapeError("trace layers must share one [heads x queries x features] shape");
        }
    }
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff),
                           static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void put_f32(std::ostream& out, float f) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::size_t offset() const { return offset_; }

    void bytes(char* dst, std::size_t count, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(count));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != count) {
            throw TraceFormatError(std::string("truncated while reading ") + what,
                                   offset_ + got);
        }
        offset_ += count;
    }

    std::uint32_t u32(const char* what) {
        char b[4];
        bytes(b, 4, what);
        return static_cast<std::uint32_t>(static_cast<unsigned char>(b[0])) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(b[1])) << 8) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(b[2])) << 16) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(b[3])) << 24);
    }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

nlohmann::json meta_to_json(const std::map<std::string, std::string>& meta) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : meta) j[k] = v;
    return j;
}

}  // namespace

void write_trace(const AttnTrace& trace, std::ostream& sink) {
    trace.validate();
    const std::string meta = meta_to_json(trace.meta).dump();
    sink.write(kTraceMagic, 4);
    put_u32(sink, kTraceVersion);
    put_u32(sink, static_cast<std::uint32_t>(trace.layers.size()));
    put_u32(sink, static_cast<std::uint32_t>(trace.heads()));
    put_u32(sink, static_cast<std::uint32_t>(trace.queries()));
    put_u32(sink, static_cast<std::uint32_t>(trace.features()));
    put_u32(sink, static_cast<std::uint32_t>(meta.size()));
    sink.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    for (const auto& layer : trace.layers) {
        for (float w : layer.weights.data) put_f32(sink, w);
    }
    if (!sink) throw Error("trace write failed");
}

void write_trace_file(const AttnTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open trace file for writing: " + path);
    write_trace(trace, out);
}

AttnTrace read_trace(std::istream& source) {
    Reader r(source);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kTraceMagic, 4) != 0) {
        throw TraceFormatError("bad magic, expected XATN", 0);
    }
    const std::uint32_t version = r.u32("version");
    if (version != kTraceVersion) {
        throw TraceFormatError("unsupported trace version " + std::to_string(version), 4);
    }
    const std::uint32_t layer_count = r.u32("layer count");
    const std::uint32_t heads = r.u32("head count");
    const std::uint32_t queries = r.u32("query count");
    const std::uint32_t features = r.u32("feature count");
    if (layer_count == 0 || heads == 0 || queries == 0 || features == 0) {
        throw TraceFormatError("zero extent in trace dims", 8);
    }
    const std::uint32_t meta_len = r.u32("meta length");
    std::string meta_text(meta_len, '\0');
    const std::size_t meta_offset = r.offset();
    if (meta_len > 0) r.bytes(meta_text.data(), meta_len, "meta");

    AttnTrace trace;
    if (meta_len > 0) {
        nlohmann::json meta = nlohmann::json::parse(meta_text, nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) {
            throw TraceFormatError("meta is not a JSON object", meta_offset);
        }
        for (const auto& [k, v] : meta.items()) {
            trace.meta[k] = v.get<std::string>();
        }
    }

    const std::size_t per_layer = static_cast<std::size_t>(heads) * queries * features;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        Tensor t({heads, queries, features});
        std::vector<char> raw(per_layer * 4);
        r.bytes(raw.data(), raw.size(), "layer payload");
        for (std::size_t i = 0; i < per_layer; ++i) {
            const std::uint32_t bits =
                static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4])) |
                (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + 1])) << 8) |
                (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + 2])) << 16) |
                (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + 3])) << 24);
            t.data[i] = std::bit_cast<float>(bits);
        }
        trace.layers.emplace_back(std::move(t));
    }
    return trace;
}

AttnTrace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file: " + path);
    return read_trace(in);
}

std::string trace_to_json(const AttnTrace& trace) {
    trace.validate();
    nlohmann::ordered_json j;
    j["version"] = kTraceVersion;
    j["heads"] = trace.heads();
    j["queries"] = trace.queries();
    j["features"] = trace.features();
    j["meta"] = meta_to_json(trace.meta);
    auto layers = nlohmann::ordered_json::array();
    for (const auto& layer : trace.layers) {
        auto jl = nlohmann::ordered_json::array();
        for (std::size_t h = 0; h < trace.heads(); ++h) {
            auto jh = nlohmann::ordered_json::array();
            for (std::size_t q = 0; q < trace.queries(); ++q) {
                auto row = nlohmann::ordered_json::array();
                for (std::size_t f = 0; f < trace.features(); ++f) {
                    row.push_back(layer.at(h, q, f));
                }
                jh.push_back(std::move(row));
            }
            jl.push_back(std::move(jh));
        }
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

AttnTrace trace_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<std::uint32_t>() != kTraceVersion) {
        throw TraceFormatError("unsupported trace version in JSON sidecar", 0);
    }
    AttnTrace trace;
    const auto heads = j.at("heads").get<std::size_t>();
    const auto queries = j.at("queries").get<std::size_t>();
    const auto features = j.at("features").get<std::size_t>();
    if (j.contains("meta")) {
        for (const auto& [k, v] : j.at("meta").items()) trace.meta[k] = v.get<std::string>();
    }
    for (const auto& jl : j.at("layers")) {
        Tensor t({heads, queries, features});
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t q = 0; q < queries; ++q) {
                for (std::size_t f = 0; f < features; ++f) {
                    t.at3(h, q, f) = jl.at(h).at(q).at(f).get<float>();
                }
            }
        }
        trace.layers.emplace_back(std::move(t));
    }
    trace.validate();
    return trace;
}

AttnTrace read_trace_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return trace_from_json(text);
}

void write_trace_json_file(const AttnTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open trace file for writing: " + path);
    out << trace_to_json(trace);
    if (!out) throw Error("trace write failed");
}

AttnTrace read_trace_any(const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        return read_trace_json_file(path);
    }
    return read_trace_file(path);
}

}  // namespace xtrim
