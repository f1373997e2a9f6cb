#include "glucoguard/ledger.hpp"

#include "glucoguard/crypto.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>

namespace glucoguard::ledger {

std::string_view to_string(TxKind kind) {
    switch (kind) {
        case TxKind::VitalsData: return "VitalsData";
        case TxKind::DetectionResult: return "DetectionResult";
        case TxKind::DoseEvent: return "DoseEvent";
        case TxKind::RetrievalGrant: return "RetrievalGrant";
    }
    return "Unknown";
}

std::optional<TxKind> tx_kind_from_string(std::string_view name) {
    for (auto k : {TxKind::VitalsData, TxKind::DetectionResult, TxKind::DoseEvent, TxKind::RetrievalGrant})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

std::string_view to_string(IntegrityReason reason) {
    switch (reason) {
        case IntegrityReason::LinkageBroken: return "LinkageBroken";
        case IntegrityReason::IndexGap: return "IndexGap";
        case IntegrityReason::HashMismatch: return "HashMismatch";
        case IntegrityReason::MerkleMismatch: return "MerkleMismatch";
        case IntegrityReason::ApprovalDigestMismatch: return "ApprovalDigestMismatch";
        case IntegrityReason::ApprovalInvalid: return "ApprovalInvalid";
    }
    return "Unknown";
}

void write_transaction(ByteWriter& out, const TransactionRecord& tx) {
    out.u8(static_cast<std::uint8_t>(tx.kind));
    out.fixed(tx.patient_id);
    out.u32(tx.created_at);
    out.u32(static_cast<std::uint32_t>(tx.payload.size()));
    out.raw(tx.payload);
}

TransactionRecord read_transaction(ByteReader& in) {
    TransactionRecord tx;
    tx.kind = static_cast<TxKind>(in.u8());
    tx.patient_id = in.fixed<UserId>();
    tx.created_at = in.u32();
    const auto len = in.u32();
    auto body = in.raw(len);
    tx.payload.assign(body.begin(), body.end());
    return tx;
}

Bytes canonical_bytes(const TransactionRecord& tx) {
    ByteWriter w;
    write_transaction(w, tx);
    return std::move(w).take();
}

Digest hash_transaction(const TransactionRecord& tx) { return sha256(canonical_bytes(tx)); }

HeaderBytes serialize_header(const BlockHeader& h) {
    ByteWriter w;
    w.u32(h.version);
    for (int i = 0; i < 24; ++i) w.u8(0);
    w.u64(h.index);
    w.fixed(h.prev_hash);
    w.fixed(h.merkle_root);
    w.u32(h.timestamp);
    w.u32(h.nonce);
    w.fixed(h.user_id);
    w.fixed(h.approval_digest);
    HeaderBytes out;
    std::copy(w.bytes().begin(), w.bytes().end(), out.begin());
    return out;
}

BlockHeader deserialize_header(ByteSpan bytes) {
    if (bytes.size() != kHeaderSize) throw DecodeError("block header must be 172 bytes");
    ByteReader r(bytes);
    BlockHeader h;
    h.version = r.u32();
    auto high = r.raw(24);
    if (std::any_of(high.begin(), high.end(), [](auto b) { return b != 0; }))
        throw DecodeError("block index exceeds 64 bits");
    h.index = r.u64();
    h.prev_hash = r.fixed<Digest>();
    h.merkle_root = r.fixed<Digest>();
    h.timestamp = r.u32();
    h.nonce = r.u32();
    h.user_id = r.fixed<UserId>();
    h.approval_digest = r.fixed<Digest>();
    return h;
}

Digest compute_block_hash(const BlockHeader& header) {
    const auto bytes = serialize_header(header);
    return sha256(ByteSpan(bytes));
}

Digest approval_digest(std::span<const MinerApproval> approvals) {
    std::vector<MinerApproval> sorted(approvals.begin(), approvals.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.miner_id < b.miner_id; });
    ByteWriter w;
    for (const auto& a : sorted) w.fixed(a.signature);
    return sha256(w.bytes());
}

Digest transactions_root(std::span<const TransactionRecord> txs) {
    std::vector<Digest> leaves;
    leaves.reserve(txs.size());
    for (const auto& tx : txs) leaves.push_back(hash_transaction(tx));
    return merkle::root(leaves);
}

namespace {

void write_block(ByteWriter& w, const Block& block) {
    const auto header = serialize_header(block.header);
    w.raw(header);
    w.u32(static_cast<std::uint32_t>(block.transactions.size()));
    for (const auto& tx : block.transactions) write_transaction(w, tx);
    w.u32(static_cast<std::uint32_t>(block.approvals.size()));
    for (const auto& a : block.approvals) {
        w.fixed(a.miner_id);
        w.fixed(a.signature);
    }
}

}  // namespace

Bytes serialize_block(const Block& block) {
    ByteWriter w;
    write_block(w, block);
    return std::move(w).take();
}

Block deserialize_block(ByteSpan bytes) {
    ByteReader r(bytes);
    Block b;
    b.header = deserialize_header(r.raw(kHeaderSize));
    const auto tx_count = r.u32();
    for (std::uint32_t i = 0; i < tx_count; ++i) b.transactions.push_back(read_transaction(r));
    const auto approval_count = r.u32();
    for (std::uint32_t i = 0; i < approval_count; ++i) {
        MinerApproval a;
        a.miner_id = r.fixed<UserId>();
        a.signature = r.fixed<Digest>();
        b.approvals.push_back(a);
    }
    if (!r.done()) throw DecodeError("trailing bytes after block record");
    b.block_hash = compute_block_hash(b.header);
    return b;
}

Bytes serialize_chain(std::span<const Block> blocks) {
    ByteWriter w;
    for (const auto& b : blocks) {
        const auto record = serialize_block(b);
        w.u32(static_cast<std::uint32_t>(record.size()));
        w.raw(record);
    }
    return std::move(w).take();
}

std::vector<Block> deserialize_chain(ByteSpan bytes) {
    ByteReader r(bytes);
    std::vector<Block> out;
    while (!r.done()) {
        const auto len = r.u32();
        out.push_back(deserialize_block(r.raw(len)));
    }
    return out;
}

void save_chain(const std::filesystem::path& path, std::span<const Block> blocks) {
    const auto bytes = serialize_chain(blocks);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Block> load_chain(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_chain(bytes);
}

std::optional<IntegrityError> validate_chain(std::span<const Block> blocks, const ApprovalAuthority* authority) {
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const Block& b = blocks[k];
        auto fail = [k](IntegrityReason r) { return IntegrityError{k, r}; };

        const Digest expected_prev = k == 0 ? Digest{} : blocks[k - 1].block_hash;
        if (b.header.prev_hash != expected_prev) return fail(IntegrityReason::LinkageBroken);
        if (b.header.index != k) return fail(IntegrityReason::IndexGap);
        if (compute_block_hash(b.header) != b.block_hash) return fail(IntegrityReason::HashMismatch);
        if (b.transactions.empty() || transactions_root(b.transactions) != b.header.merkle_root)
            return fail(IntegrityReason::MerkleMismatch);

        const bool sorted = std::adjacent_find(b.approvals.begin(), b.approvals.end(), [](auto& x, auto& y) {
                                return !(x.miner_id < y.miner_id);
                            }) == b.approvals.end();
        if (!sorted || approval_digest(b.approvals) != b.header.approval_digest)
            return fail(IntegrityReason::ApprovalDigestMismatch);

        if (authority) {
            for (const auto& a : b.approvals)
                if (!authority->signature_matches(a, b.header.merkle_root))
                    return fail(IntegrityReason::ApprovalInvalid);
        }
    }
    return std::nullopt;
}

std::vector<TransactionRecord> query_transactions(std::span<const Block> blocks, const UserId& patient,
                                                  std::optional<TxKind> kind, TimeRange range) {
    std::vector<TransactionRecord> out;
    for (const auto& b : blocks)
        for (const auto& tx : b.transactions) {
            if (tx.patient_id != patient) continue;
            if (kind && tx.kind != *kind) continue;
            if (tx.created_at < range.from || tx.created_at > range.to) continue;
            out.push_back(tx);
        }
    return out;
}

Ledger::Ledger(const ApprovalAuthority& authority, ApprovalThreshold threshold)
    : authority_(authority), threshold_(threshold) {}

void Ledger::submit(TransactionRecord tx) {
    std::unique_lock lock(mutex_);
    if (std::find(pool_.begin(), pool_.end(), tx) != pool_.end())
        throw LedgerError(LedgerErrorCode::DuplicateTransaction, "transaction already pending");
    pool_.push_back(std::move(tx));
}

std::vector<TransactionRecord> Ledger::pool() const {
    std::shared_lock lock(mutex_);
    return pool_;
}

std::vector<TransactionRecord> Ledger::pending_for(const UserId& patient) const {
    std::shared_lock lock(mutex_);
    std::vector<TransactionRecord> out;
    std::copy_if(pool_.begin(), pool_.end(), std::back_inserter(out),
                 [&](const auto& tx) { return tx.patient_id == patient; });
    return out;
}

std::size_t Ledger::required_approvals(const UserId& patient) const {
    return threshold_.required(authority_.miners_of(patient).size());
}

Block Ledger::append_block(std::span<const TransactionRecord> txs, std::vector<MinerApproval> approvals,
                           const UserId& user_id, std::uint32_t timestamp) {
    if (txs.empty()) throw LedgerError(LedgerErrorCode::EmptyTransactionSet, "no transactions to append");
    if (!authority_.is_registered(user_id))
        throw LedgerError(LedgerErrorCode::UnknownPatient, "block user is not registered");
    for (const auto& tx : txs)
        if (!authority_.is_registered(tx.patient_id))
            throw LedgerError(LedgerErrorCode::UnknownPatient, "transaction patient is not registered");

    const Digest root = transactions_root(txs);
    const auto miners = authority_.miners_of(user_id);

    std::sort(approvals.begin(), approvals.end(),
              [](const auto& a, const auto& b) { return a.miner_id < b.miner_id; });
    approvals.erase(std::unique(approvals.begin(), approvals.end(),
                                [](const auto& a, const auto& b) { return a.miner_id == b.miner_id; }),
                    approvals.end());
    for (const auto& a : approvals) {
        const bool is_miner = std::find(miners.begin(), miners.end(), a.miner_id) != miners.end();
        if (!is_miner || !authority_.accepts_approval(a, root))
            throw LedgerError(LedgerErrorCode::InvalidSignature, "approval from " + to_hex(a.miner_id) + " rejected",
                              a.miner_id);
    }
    const auto required = threshold_.required(miners.size());
    if (approvals.size() < required)
        throw LedgerError(LedgerErrorCode::InsufficientApprovals,
                          std::to_string(approvals.size()) + " of " + std::to_string(required) +
                              " required approvals");

    std::unique_lock lock(mutex_);
    Block b;
    b.header.version = kBlockVersion;
    b.header.index = chain_.size();
    if (!chain_.empty()) {
        b.header.prev_hash = chain_.back().block_hash;
        b.header.nonce = chain_.back().header.nonce + 1;
    }
    b.header.merkle_root = root;
    b.header.timestamp = timestamp;
    b.header.user_id = user_id;
    b.header.approval_digest = approval_digest(approvals);
    b.transactions.assign(txs.begin(), txs.end());
    b.approvals = std::move(approvals);
    b.block_hash = compute_block_hash(b.header);

    for (const auto& tx : b.transactions) {
        auto it = std::find(pool_.begin(), pool_.end(), tx);
        if (it != pool_.end()) pool_.erase(it);
    }
    hash_table_.emplace(b.block_hash, b.header.index);
    chain_.push_back(b);
    return b;
}

std::size_t Ledger::size() const {
    std::shared_lock lock(mutex_);
    return chain_.size();
}

std::optional<Block> Ledger::block(std::uint64_t index) const {
    std::shared_lock lock(mutex_);
    if (index >= chain_.size()) return std::nullopt;
    return chain_[index];
}

std::optional<Block> Ledger::tip() const {
    std::shared_lock lock(mutex_);
    if (chain_.empty()) return std::nullopt;
    return chain_.back();
}

std::vector<Block> Ledger::blocks() const {
    std::shared_lock lock(mutex_);
    return chain_;
}

std::optional<std::uint64_t> Ledger::find_by_hash(const Digest& hash) const {
    std::shared_lock lock(mutex_);
    auto it = hash_table_.find(hash);
    if (it == hash_table_.end()) return std::nullopt;
    return it->second;
}

std::size_t Ledger::hash_table_size() const {
    std::shared_lock lock(mutex_);
    return hash_table_.size();
}

std::optional<IntegrityError> Ledger::validate() const {
    std::shared_lock lock(mutex_);
    return validate_chain(chain_, &authority_);
}

std::vector<TransactionRecord> Ledger::query(const UserId& patient, std::optional<TxKind> kind,
                                             TimeRange range) const {
    std::shared_lock lock(mutex_);
    return query_transactions(chain_, patient, kind, range);
}

void Ledger::restore(std::vector<Block> blocks) {
    std::unique_lock lock(mutex_);
    chain_ = std::move(blocks);
    hash_table_.clear();
    for (const auto& b : chain_) hash_table_.emplace(b.block_hash, b.header.index);
}

void Ledger::mutate_unchecked(const std::function<void(std::vector<Block>&)>& fn) {
    std::unique_lock lock(mutex_);
    fn(chain_);
}

}  // namespace glucoguard::ledger
