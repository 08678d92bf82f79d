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

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cream/common.hpp"

namespace cream {

struct TextItem {
    std::string id;
    std::string text;
    int topic = -1;  // generator label; -1 when unknown
};

/// One session of the stream. Training items feed memory and encoder
/// updates; eval queries and eval documents form the held-out side used by
/// the evaluation protocols. Qrels are never read by the learner.
struct SessionStream {
    std::size_t index = 0;
    std::vector<TextItem> queries;
    std::vector<TextItem> documents;
    std::vector<TextItem> eval_queries;
    std::vector<TextItem> eval_documents;
    std::map<std::string, std::set<std::string>> qrels;

    /// Throws on duplicate ids or qrels that point at unknown ids.
    void validate() const;
};

/// Line-delimited JSON: {"type":"query"|"document","id","text"[,"split"][,"topic"]}
/// and {"type":"qrel","qid","did"}. Missing split means "train".
SessionStream read_session(const std::string& path, std::size_t index);
void write_session(const SessionStream& s, const std::string& path);

/// Reads session_0.jsonl, session_1.jsonl, ... from a directory until the
/// next index is missing.
std::vector<SessionStream> read_sessions(const std::string& dir);
void write_sessions(const std::vector<SessionStream>& sessions, const std::string& dir);

/// Precomputed token embeddings keyed by item id. Binary layout: "CRME",
/// version u32, d u32, then per item: id length u16, id bytes, n u16, n*d
/// little-endian f32.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<std::string, Matrix> rows;
};

EmbeddingTable read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingTable& table, const std::string& path);

}  // namespace cream
