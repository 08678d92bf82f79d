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

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cream/lshproto.hpp"
#include "cream/pipeline.hpp"
#include "cream/session.hpp"
#include "cream/synthetic.hpp"
#include "json.hpp"

namespace {

struct RunOptions {
    std::string sessions;
    std::string config;
    std::string protocol = "shared";
    std::string variant = "full";
    std::uint64_t seed = 0;
    std::string report;
    std::string embeddings;
    std::string samples_out;
    std::string memory_out;
    std::string checkpoint_out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--sessions", o.sessions, "directory of session_<t>.jsonl files")->required();
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--protocol", o.protocol, "evaluation protocol")
        ->check(CLI::IsMember({"shared", "disjoint"}));
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--report", o.report, "write the JSON report here (default: stdout)");
    cmd->add_option("--embeddings", o.embeddings, "precomputed token embeddings (CRME) replacing the base embedder");
    cmd->add_option("--samples-out", o.samples_out, "dump sampled training groups as JSONL");
    cmd->add_option("--memory-out", o.memory_out, "write the final memory as <prefix>.json and <prefix>.crmp");
    cmd->add_option("--checkpoint-out", o.checkpoint_out, "write the final adapter checkpoint");
}

int run(const RunOptions& o) {
    const auto cfg = o.config.empty() ? cream::Config{} : cream::Config::load(o.config);
    std::shared_ptr<const cream::EmbeddingTable> table;
    if (!o.embeddings.empty()) {
        table = std::make_shared<cream::EmbeddingTable>(cream::read_embeddings(o.embeddings));
    }
    const auto sessions = cream::read_sessions(o.sessions);
    cream::Pipeline pipe(cfg, cream::variant_from_string(o.variant), cream::protocol_from_string(o.protocol), o.seed,
                         table);

    std::ofstream samples;
    if (!o.samples_out.empty()) {
        samples.open(o.samples_out);
        if (!samples) {
            throw cream::Error("cannot write " + o.samples_out);
        }
    }
    cream::EvalReport report;
    report.protocol = cream::protocol_from_string(o.protocol);
    report.variant = cream::variant_from_string(o.variant);
    report.seed = o.seed;
    report.config = cfg;
    for (const auto& s : sessions) {
        report.sessions.push_back(pipe.run_session(s));
        if (samples.is_open()) {
            cream::write_samples_jsonl(samples, s.index, pipe.last_samples());
        }
    }

    const auto text = report.to_json().dump(2) + "\n";
    if (o.report.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(o.report);
        if (!out) {
            throw cream::Error("cannot write " + o.report);
        }
        out << text;
    }
    if (!o.memory_out.empty() && pipe.memory() != nullptr) {
        cream::write_snapshot(cream::snapshot_of(*pipe.memory()), o.memory_out + ".json", o.memory_out + ".crmp");
    }
    if (!o.checkpoint_out.empty()) {
        cream::write_checkpoint(pipe.adapter(), o.checkpoint_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual streaming retrieval with an adaptive soft memory"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log per-session progress");

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "run the full pipeline over a session stream");
    add_run_options(run_cmd, run_opts);

    RunOptions ablate_opts;
    auto* ablate_cmd = app.add_subcommand("ablate", "run one ablation variant over a session stream");
    add_run_options(ablate_cmd, ablate_opts);
    ablate_cmd->add_option("--variant", ablate_opts.variant, "pipeline variant")
        ->required()
        ->check(CLI::IsMember({"full", "no-finegrained", "no-train", "no-softmem"}));

    std::uint64_t tokens = 0;
    double epsilon = cream::optimal_epsilon();
    auto* bits_cmd = app.add_subcommand("bits", "sufficient LSH bit size for M token embeddings");
    bits_cmd->add_option("--tokens", tokens, "number of token embeddings M")->required();
    bits_cmd->add_option("--epsilon", epsilon, "distortion rate in (0, 1/3)");

    cream::SynthConfig synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic drifting session stream");
    synth_cmd->add_option("--topics", synth.topics, "number of topics")->required();
    synth_cmd->add_option("--sessions", synth.sessions, "number of sessions")->required();
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--train-queries", synth.train_queries_per_topic, "training queries per topic");
    synth_cmd->add_option("--eval-queries", synth.eval_queries_per_topic, "evaluation queries per topic");
    synth_cmd->add_option("--distractors", synth.distractors, "unjudged documents per pool");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

    try {
        if (*run_cmd) {
            return run(run_opts);
        }
        if (*ablate_cmd) {
            return run(ablate_opts);
        }
        if (*bits_cmd) {
            const auto r = cream::sufficient_bits(tokens, epsilon);
            std::cout << nlohmann::json{{"M", r.tokens}, {"epsilon", r.epsilon}, {"bits", r.bits},
                                        {"buckets", r.buckets}}
                             .dump()
                      << '\n';
            return 0;
        }
        if (*synth_cmd) {
            cream::write_sessions(cream::generate_synthetic_stream(synth), synth_out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
