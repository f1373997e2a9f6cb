#include "glucoguard/merkle.hpp"

#include "glucoguard/crypto.hpp"

namespace glucoguard::merkle {

namespace {

Digest parent(const Digest& left, const Digest& right) {
    return sha256({left.span(), right.span()});
}

std::vector<Digest> next_level(const std::vector<Digest>& level) {
    std::vector<Digest> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
        const Digest& right = i + 1 < level.size() ? level[i + 1] : level[i];
        up.push_back(parent(level[i], right));
    }
    return up;
}

}  // namespace

Digest root(std::span<const Digest> leaves) {
    if (leaves.empty()) throw EmptyLeafSet();
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) level = next_level(level);
    return level.front();
}

Proof proof(std::span<const Digest> leaves, std::size_t index) {
    if (index >= leaves.size()) throw IndexOutOfRange();
    Proof out;
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        if (index % 2 == 0) {
            const Digest& sib = index + 1 < level.size() ? level[index + 1] : level[index];
            out.push_back({sib, Side::Right});
        } else {
            out.push_back({level[index - 1], Side::Left});
        }
        level = next_level(level);
        index /= 2;
    }
    return out;
}

bool verify(const Digest& leaf, const Proof& proof, const Digest& root) {
    Digest acc = leaf;
    for (const auto& step : proof)
        acc = step.side == Side::Right ? parent(acc, step.sibling) : parent(step.sibling, acc);
    return acc == root;
}

}  // namespace glucoguard::merkle
