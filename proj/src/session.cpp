// Copyright 2026-present the cream project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cream/session.hpp"

#include <filesystem>
#include <fstream>

#include "cream/binary_io.hpp"
#include "json.hpp"

namespace cream {

void SessionStream::validate() const {
    std::set<std::string> queries_seen;
    std::set<std::string> docs_seen;
    auto collect = [](const std::vector<TextItem>& items, std::set<std::string>& seen, std::set<std::string>& other) {
        for (const auto& it : items) {
            if (!seen.insert(it.id).second || other.count(it.id) != 0) {
                throw Error("duplicate id '" + it.id + "'");
            }
        }
    };
    collect(queries, queries_seen, docs_seen);
    collect(eval_queries, queries_seen, docs_seen);
    collect(documents, docs_seen, queries_seen);
    collect(eval_documents, docs_seen, queries_seen);
    for (const auto& [qid, dids] : qrels) {
        if (queries_seen.count(qid) == 0) {
            throw Error("qrel references unknown query '" + qid + "'");
        }
        for (const auto& did : dids) {
            if (docs_seen.count(did) == 0) {
                throw Error("qrel references unknown document '" + did + "'");
            }
        }
    }
}

SessionStream read_session(const std::string& path, std::size_t index) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read " + path);
    }
    SessionStream s;
    s.index = index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const auto type = j.at("type").get<std::string>();
        if (type == "qrel") {
            s.qrels[j.at("qid").get<std::string>()].insert(j.at("did").get<std::string>());
            continue;
        }
        TextItem item{j.at("id").get<std::string>(), j.at("text").get<std::string>(), j.value("topic", -1)};
        const auto split = j.value("split", std::string("train"));
        if (split != "train" && split != "eval") {
            throw Error(path + ":" + std::to_string(lineno) + ": unknown split '" + split + "'");
        }
        const bool eval = split == "eval";
        if (type == "query") {
            (eval ? s.eval_queries : s.queries).push_back(std::move(item));
        } else if (type == "document") {
            (eval ? s.eval_documents : s.documents).push_back(std::move(item));
        } else {
            throw Error(path + ":" + std::to_string(lineno) + ": unknown record type '" + type + "'");
        }
    }
    s.validate();
    return s;
}

void write_session(const SessionStream& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    auto emit = [&out](const std::vector<TextItem>& items, const char* type, const char* split) {
        for (const auto& it : items) {
            nlohmann::json j = {{"type", type}, {"id", it.id}, {"text", it.text}, {"split", split}};
            if (it.topic >= 0) {
                j["topic"] = it.topic;
            }
            out << j.dump() << '\n';
        }
    };
    emit(s.queries, "query", "train");
    emit(s.documents, "document", "train");
    emit(s.eval_queries, "query", "eval");
    emit(s.eval_documents, "document", "eval");
    for (const auto& [qid, dids] : s.qrels) {
        for (const auto& did : dids) {
            out << nlohmann::json{{"type", "qrel"}, {"qid", qid}, {"did", did}}.dump() << '\n';
        }
    }
}

std::vector<SessionStream> read_sessions(const std::string& dir) {
    std::vector<SessionStream> out;
    for (std::size_t t = 0;; ++t) {
        const auto p = std::filesystem::path(dir) / ("session_" + std::to_string(t) + ".jsonl");
        if (!std::filesystem::exists(p)) {
            break;
        }
        out.push_back(read_session(p.string(), t));
    }
    if (out.empty()) {
        throw Error("no session_0.jsonl in " + dir);
    }
    return out;
}

void write_sessions(const std::vector<SessionStream>& sessions, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& s : sessions) {
        write_session(s, (std::filesystem::path(dir) / ("session_" + std::to_string(s.index) + ".jsonl")).string());
    }
}

namespace {
constexpr std::uint32_t kEmbeddingVersion = 1;
}

EmbeddingTable read_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path);
    }
    bin::expect_magic(in, "CRME");
    if (bin::get<std::uint32_t>(in) != kEmbeddingVersion) {
        throw Error("unsupported embedding file version in " + path);
    }
    EmbeddingTable t;
    t.dim = bin::get<std::uint32_t>(in);
    if (t.dim == 0) {
        throw Error("embedding dimension must be positive");
    }
    while (in.peek() != std::char_traits<char>::eof()) {
        const auto len = bin::get<std::uint16_t>(in);
        std::string id(len, '\0');
        in.read(id.data(), len);
        const auto n = bin::get<std::uint16_t>(in);
        Matrix m(n, t.dim);
        for (auto& v : m.data()) {
            v = bin::get<float>(in);
        }
        for (std::size_t i = 0; i < n; ++i) {
            // f32 storage loses the unit norm at ~1e-7; restore it.
            if (!normalize_in_place(m.row(i))) {
                throw Error("zero embedding row for item '" + id + "'");
            }
        }
        if (!t.rows.emplace(std::move(id), std::move(m)).second) {
            throw Error("duplicate item in embedding file " + path);
        }
    }
    return t;
}

void write_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    bin::put_magic(out, "CRME");
    bin::put<std::uint32_t>(out, kEmbeddingVersion);
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim));
    for (const auto& [id, m] : table.rows) {
        if (id.size() > 0xffff || m.rows() > 0xffff || m.cols() != table.dim) {
            throw Error("item '" + id + "' cannot be stored in the embedding file");
        }
        bin::put<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        bin::put<std::uint16_t>(out, static_cast<std::uint16_t>(m.rows()));
        for (double v : m.data()) {
            bin::put<float>(out, static_cast<float>(v));
        }
    }
}

}  // namespace cream
