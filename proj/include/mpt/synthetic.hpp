#pragma once

#include <cstdint>

#include "mpt/core.hpp"
#include "mpt/prompting.hpp"

namespace mpt::synthetic {

// A separable 3-class token-family task: each class owns a disjoint signal
// vocabulary, every instance carries a few signal tokens of its class mixed
// with shared filler, so a full-vocabulary scorer is perfect while a few-shot
// one is not. Drives the end-to-end pipeline checks and the bundled demo.
struct TaskSpec {
    int signal_vocab_per_class = 30;
    int shared_vocab = 80;
    int min_tokens = 7;
    int max_tokens = 10;
    int min_signal = 3;
    int max_signal = 4;
    std::uint64_t seed = 97;
};

struct SyntheticTask {
    core::Dataset train_source;
    core::Dataset test;
    prompting::TemplatePack pack;  // 4 hard + 2 soft templates, shared verbalizer
};

SyntheticTask make_task(const TaskSpec& spec, int train_per_class, int test_per_class);

prompting::TemplatePack make_pack();

}  // namespace mpt::synthetic
