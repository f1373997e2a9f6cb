#pragma once

#include "glucoguard/bytes.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace glucoguard::merkle {

struct EmptyLeafSet : std::invalid_argument {
    EmptyLeafSet() : std::invalid_argument("merkle: empty leaf set") {}
};

struct IndexOutOfRange : std::out_of_range {
    IndexOutOfRange() : std::out_of_range("merkle: leaf index out of range") {}
};

/// Which side of the running hash the sibling sits on.
enum class Side : std::uint8_t { Left, Right };

struct ProofStep {
    Digest sibling;
    Side side;

    friend bool operator==(const ProofStep&, const ProofStep&) = default;
};

using Proof = std::vector<ProofStep>;

/// Root of the binary hash tree over `leaves`. Parents are SHA-256(left || right);
/// an odd node at the end of a level is paired with itself. A single leaf is
/// its own root.
Digest root(std::span<const Digest> leaves);

/// Inclusion proof for leaves[index], bottom level first.
Proof proof(std::span<const Digest> leaves, std::size_t index);

bool verify(const Digest& leaf, const Proof& proof, const Digest& root);

}  // namespace glucoguard::merkle
