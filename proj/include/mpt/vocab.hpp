#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mpt/rng.hpp"

namespace mpt::backend {

// Capability surface a backend exposes to the prompting layer: how words
// tokenize, the mask id, and ids for trainable soft-slot placeholders.
// Deterministic for a fixed backend.
class VocabularyProbe {
  public:
    virtual ~VocabularyProbe() = default;

    virtual std::vector<std::int64_t> token_ids(std::string_view word) const = 0;
    virtual bool contains(std::string_view word) const = 0;
    virtual std::int64_t mask_id() const = 0;

    int token_count(std::string_view word) const {
        return static_cast<int>(token_ids(word).size());
    }

    // Placeholder id for the trainable embedding keyed by (template, slot).
    virtual std::int64_t soft_slot_id(std::string_view template_id, int slot_index) const {
        std::uint64_t h = fnv1a64(template_id);
        h = hash_mix(h, static_cast<std::uint64_t>(slot_index) + 1);
        return static_cast<std::int64_t>(h | 0x4000000000000000ULL);
    }
};

}  // namespace mpt::backend
