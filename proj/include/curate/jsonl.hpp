#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "curate/corpus.hpp"

namespace curate {

/// One malformed input line. The reader skips and reports rather than
/// aborting: web-scale inputs are dirty by assumption.
struct LineError {
    std::string file;
    std::size_t line_number = 0;  // 1-based
    std::string message;
};

namespace detail {

// Line source over either a plain or a gzip-compressed stream. gzFile reads
// plain files transparently too, but we keep the flag explicit so the CLI
// contract ("--compressed") stays honest.
class LineSource {
public:
    LineSource(const std::string& path, bool compressed) : path_(path), compressed_(compressed) {
        if (compressed_) {
            gz_ = gzopen(path.c_str(), "rb");
            if (!gz_) throw std::runtime_error("cannot open " + path);
        } else {
            plain_.open(path, std::ios::binary);
            if (!plain_) throw std::runtime_error("cannot open " + path);
        }
    }

    ~LineSource() {
        if (gz_) gzclose(gz_);
    }

    LineSource(const LineSource&) = delete;
    LineSource& operator=(const LineSource&) = delete;

    bool next_line(std::string& out) {
        if (!compressed_) {
            if (!std::getline(plain_, out)) return false;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            return true;
        }
        out.clear();
        char buf[1 << 14];
        while (true) {
            if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return !out.empty();
            out += buf;
            if (!out.empty() && out.back() == '\n') {
                out.pop_back();
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return true;
            }
            // else: line longer than buffer, keep reading
        }
    }

private:
    std::string path_;
    bool compressed_;
    std::ifstream plain_;
    gzFile gz_ = nullptr;
};

class LineSink {
public:
    LineSink(const std::string& path, bool compressed) : compressed_(compressed) {
        if (compressed_) {
            gz_ = gzopen(path.c_str(), "wb");
            if (!gz_) throw std::runtime_error("cannot open " + path + " for writing");
        } else {
            plain_.open(path, std::ios::binary | std::ios::trunc);
            if (!plain_) throw std::runtime_error("cannot open " + path + " for writing");
        }
    }

    ~LineSink() {
        if (gz_) gzclose(gz_);
    }

    LineSink(const LineSink&) = delete;
    LineSink& operator=(const LineSink&) = delete;

    void write_line(const std::string& line) {
        if (compressed_) {
            if (gzwrite(gz_, line.data(), static_cast<unsigned>(line.size())) !=
                    static_cast<int>(line.size()) ||
                gzwrite(gz_, "\n", 1) != 1)
                throw std::runtime_error("gzip write failed");
        } else {
            plain_ << line << '\n';
            if (!plain_) throw std::runtime_error("write failed");
        }
    }

private:
    bool compressed_;
    std::ofstream plain_;
    gzFile gz_ = nullptr;
};

inline bool looks_compressed(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

}  // namespace detail

inline Document document_from_json(const nlohmann::json& j, const std::string& fallback_id) {
    Document d;
    if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
    if (!j.contains("text")) throw std::runtime_error("missing \"text\" field");
    d.text = j.at("text").get<std::string>();
    if (d.text.find('\0') != std::string::npos)
        throw std::runtime_error("text contains NUL byte");
    for (const auto& [key, value] : j.items()) {
        if (key == "text") continue;
        if (key == "id" && value.is_string()) {
            d.id = value.get<std::string>();
        } else if (key == "url" && value.is_string()) {
            d.url = value.get<std::string>();
        } else if (key == "source" && value.is_string()) {
            d.source = value.get<std::string>();
        } else if (key == "metadata" && value.is_object()) {
            for (const auto& [mk, mv] : value.items())
                d.metadata[mk] = mv.is_string() ? mv.get<std::string>() : mv.dump();
        } else {
            // unknown fields land in metadata
            d.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }
    if (d.id.empty()) d.id = fallback_id;
    return d;
}

inline nlohmann::json document_to_json(const Document& d) {
    nlohmann::json j;
    j["id"] = d.id;
    j["url"] = d.url;
    j["text"] = d.text;
    j["source"] = d.source;
    j["metadata"] = nlohmann::json::object();
    for (const auto& [k, v] : d.metadata) j["metadata"][k] = v;
    return j;
}

/// Streaming JSONL reader. Missing ids are synthesized as
/// "<filename>:<line-number>" so downstream stages always see stable ids.
class JsonlReader {
public:
    explicit JsonlReader(const std::string& path)
        : JsonlReader(path, detail::looks_compressed(path)) {}

    JsonlReader(const std::string& path, bool compressed)
        : source_(path, compressed),
          filename_(std::filesystem::path(path).filename().string()) {}

    /// Next well-formed document, skipping (and recording) malformed lines.
    std::optional<Document> next() {
        std::string line;
        while (source_.next_line(line)) {
            ++line_number_;
            if (line.empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                return document_from_json(j, filename_ + ":" + std::to_string(line_number_));
            } catch (const std::exception& e) {
                errors_.push_back({filename_, line_number_, e.what()});
            }
        }
        return std::nullopt;
    }

    const std::vector<LineError>& errors() const { return errors_; }

private:
    detail::LineSource source_;
    std::string filename_;
    std::size_t line_number_ = 0;
    std::vector<LineError> errors_;
};

struct ReadResult {
    Corpus documents;
    std::vector<LineError> errors;
};

inline ReadResult read_jsonl(const std::string& path) {
    JsonlReader reader(path);
    ReadResult r;
    while (auto d = reader.next()) r.documents.push_back(std::move(*d));
    r.errors = reader.errors();
    return r;
}

inline ReadResult read_jsonl(const std::string& path, bool compressed) {
    JsonlReader reader(path, compressed);
    ReadResult r;
    while (auto d = reader.next()) r.documents.push_back(std::move(*d));
    r.errors = reader.errors();
    return r;
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path)
        : JsonlWriter(path, detail::looks_compressed(path)) {}

    JsonlWriter(const std::string& path, bool compressed) : sink_(path, compressed) {}

    void write(const Document& d) {
        sink_.write_line(document_to_json(d).dump());
        ++count_;
    }

    std::size_t count() const { return count_; }

private:
    detail::LineSink sink_;
    std::size_t count_ = 0;
};

inline std::size_t write_jsonl(const Corpus& docs, const std::string& path) {
    JsonlWriter w(path);
    for (const Document& d : docs) w.write(d);
    return w.count();
}

inline std::size_t write_jsonl(const Corpus& docs, const std::string& path, bool compressed) {
    JsonlWriter w(path, compressed);
    for (const Document& d : docs) w.write(d);
    return w.count();
}

}  // namespace curate
