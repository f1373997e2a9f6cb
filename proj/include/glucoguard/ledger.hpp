#pragma once

#include "glucoguard/bytes.hpp"
#include "glucoguard/merkle.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace glucoguard::ledger {

enum class TxKind : std::uint8_t {
    VitalsData = 0,
    DetectionResult = 1,
    DoseEvent = 2,
    RetrievalGrant = 3,
};

std::string_view to_string(TxKind kind);
std::optional<TxKind> tx_kind_from_string(std::string_view name);

/// The content carried by one smart contract. `payload` is already in the
/// owning module's canonical encoding.
struct TransactionRecord {
    TxKind kind = TxKind::VitalsData;
    UserId patient_id;
    Bytes payload;
    std::uint32_t created_at = 0;

    friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

/// kind (1) || patient_id (32) || created_at (4 BE) || payload length (4 BE) || payload
Bytes canonical_bytes(const TransactionRecord& tx);
void write_transaction(ByteWriter& out, const TransactionRecord& tx);
TransactionRecord read_transaction(ByteReader& in);

Digest hash_transaction(const TransactionRecord& tx);

inline constexpr std::size_t kHeaderSize = 172;
inline constexpr std::uint32_t kBlockVersion = 1;

struct BlockHeader {
    std::uint32_t version = kBlockVersion;
    std::uint64_t index = 0;  // serialized as a 32-byte big-endian integer
    Digest prev_hash;
    Digest merkle_root;
    std::uint32_t timestamp = 0;  // seconds; wraps in 2106 as unsigned
    std::uint32_t nonce = 0;
    UserId user_id;
    Digest approval_digest;

    friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

using HeaderBytes = std::array<std::uint8_t, kHeaderSize>;

HeaderBytes serialize_header(const BlockHeader& header);
BlockHeader deserialize_header(ByteSpan bytes);
Digest compute_block_hash(const BlockHeader& header);

struct MinerApproval {
    UserId miner_id;
    Digest signature;

    friend bool operator==(const MinerApproval&, const MinerApproval&) = default;
};

/// SHA-256 of the signatures concatenated in ascending miner-id order.
Digest approval_digest(std::span<const MinerApproval> approvals);

struct Block {
    BlockHeader header;
    std::vector<TransactionRecord> transactions;
    std::vector<MinerApproval> approvals;  // sorted by miner_id
    Digest block_hash;

    friend bool operator==(const Block&, const Block&) = default;
};

Digest transactions_root(std::span<const TransactionRecord> txs);

/// header || tx count || txs || approval count || (miner_id || signature)*
Bytes serialize_block(const Block& block);
/// Recomputes block_hash from the decoded header.
Block deserialize_block(ByteSpan bytes);

/// Length-prefixed (4-byte BE) block records, back to back.
Bytes serialize_chain(std::span<const Block> blocks);
std::vector<Block> deserialize_chain(ByteSpan bytes);

void save_chain(const std::filesystem::path& path, std::span<const Block> blocks);
std::vector<Block> load_chain(const std::filesystem::path& path);

/// What the ledger needs to know about identities. Implemented by the
/// identity registry; kept abstract so the ledger does not own user state.
class ApprovalAuthority {
public:
    virtual ~ApprovalAuthority() = default;
    virtual bool is_registered(const UserId& id) const = 0;
    virtual std::vector<UserId> miners_of(const UserId& patient) const = 0;
    /// Check for a new block: the miner must be known and currently Active.
    virtual bool accepts_approval(const MinerApproval& approval, const Digest& root) const = 0;
    /// Check for an already appended block: key match only, status ignored.
    virtual bool signature_matches(const MinerApproval& approval, const Digest& root) const = 0;
};

struct ApprovalThreshold {
    /// Zero means strict majority of the patient's registered miners.
    std::size_t fixed = 0;

    std::size_t required(std::size_t miner_count) const {
        return fixed > 0 ? fixed : miner_count / 2 + 1;
    }
};

enum class LedgerErrorCode {
    EmptyTransactionSet,
    InsufficientApprovals,
    InvalidSignature,
    UnknownPatient,
    DuplicateTransaction,
};

class LedgerError : public std::runtime_error {
public:
    LedgerError(LedgerErrorCode code, std::string what, std::optional<UserId> miner = std::nullopt)
        : std::runtime_error(std::move(what)), code_(code), miner_(miner) {}
    LedgerErrorCode code() const { return code_; }
    /// Set for InvalidSignature.
    const std::optional<UserId>& miner() const { return miner_; }

private:
    LedgerErrorCode code_;
    std::optional<UserId> miner_;
};

enum class IntegrityReason {
    LinkageBroken,
    IndexGap,
    HashMismatch,
    MerkleMismatch,
    ApprovalDigestMismatch,
    ApprovalInvalid,
};

std::string_view to_string(IntegrityReason reason);

struct IntegrityError {
    std::uint64_t block_index;
    IntegrityReason reason;

    friend bool operator==(const IntegrityError&, const IntegrityError&) = default;
};

/// First failure in chain order, or nullopt when intact. With an authority,
/// every approval signature is also re-checked against the stored root.
std::optional<IntegrityError> validate_chain(std::span<const Block> blocks,
                                             const ApprovalAuthority* authority = nullptr);

struct TimeRange {
    std::uint32_t from = 0;
    std::uint32_t to = UINT32_MAX;  // inclusive
};

std::vector<TransactionRecord> query_transactions(std::span<const Block> blocks,
                                                  const UserId& patient,
                                                  std::optional<TxKind> kind = std::nullopt,
                                                  TimeRange range = {});

/// Single-writer chain with its transaction pool and hash table. Readers take
/// a shared lock; appends are exclusive.
class Ledger {
public:
    Ledger(const ApprovalAuthority& authority, ApprovalThreshold threshold = {});

    /// Adds to the pool; throws DuplicateTransaction if already pending.
    void submit(TransactionRecord tx);
    std::vector<TransactionRecord> pool() const;
    std::vector<TransactionRecord> pending_for(const UserId& patient) const;

    /// Appends one block over `txs` (in order). Any of them found in the pool
    /// are removed from it. Nothing changes when this throws.
    Block append_block(std::span<const TransactionRecord> txs, std::vector<MinerApproval> approvals,
                       const UserId& user_id, std::uint32_t timestamp);

    std::size_t required_approvals(const UserId& patient) const;

    std::size_t size() const;
    std::optional<Block> block(std::uint64_t index) const;
    std::optional<Block> tip() const;
    std::vector<Block> blocks() const;
    std::optional<std::uint64_t> find_by_hash(const Digest& hash) const;
    std::size_t hash_table_size() const;

    std::optional<IntegrityError> validate() const;
    std::vector<TransactionRecord> query(const UserId& patient, std::optional<TxKind> kind = std::nullopt,
                                         TimeRange range = {}) const;

    /// Replaces the chain (e.g. from disk) and rebuilds the hash table.
    /// The caller is responsible for validating it first.
    void restore(std::vector<Block> blocks);

    /// Direct write access to stored blocks, bypassing every check. Exists for
    /// tamper-evidence harnesses; the hash table is not touched.
    void mutate_unchecked(const std::function<void(std::vector<Block>&)>& fn);

private:
    const ApprovalAuthority& authority_;
    ApprovalThreshold threshold_;
    mutable std::shared_mutex mutex_;
    std::vector<Block> chain_;
    std::vector<TransactionRecord> pool_;
    std::unordered_map<Digest, std::uint64_t> hash_table_;
};

}  // namespace glucoguard::ledger
