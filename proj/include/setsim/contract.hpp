#pragma once

// Majority-arbitration contract on a simulated ledger.
//
// One epoch = one build round: every registered, non-blacklisted account
// submits exactly one payload (full 64-byte signing material, or just the
// 32-byte measurement). Each submission increments a counter keyed by the
// submission hash; the decision is taken automatically with the last
// expected submission. A strict majority (tally > floor(n/2)) selects the
// winning hash; ties and mere pluralities fail closed: no material is ever
// released for signing.
//
// Gas: the first submission that stores a given payload value in an epoch
// pays the first-store price, every further submission of that same value
// pays the cheaper one. Fiat display truncates toward zero to whole cents.
//
// The ledger is an append-only log of records chained by SHA-256; replaying
// it from the genesis record reproduces the contract state exactly.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "setsim/crypto.hpp"
#include "setsim/signing.hpp"

namespace setsim::chain {

using AccountId = std::array<uint8_t, 20>;

inline std::string account_hex(const AccountId& a) { return to_hex(ByteSpan(a.data(), a.size())); }

inline AccountId account_from_seed(uint64_t seed, uint32_t index) {
    Bytes b = to_bytes("account:");
    put_u64le(b, seed);
    put_u32le(b, index);
    Hash h = sha256(b);
    AccountId id{};
    std::copy(h.begin(), h.begin() + 20, id.begin());
    return id;
}

class ContractError : public std::runtime_error {
  public:
    enum class Kind {
        EmptyAccounts,
        DuplicateAccount,
        UnknownAccount,
        Blacklisted,
        DoubleSubmission,
        EpochClosed,
        WrongPayloadLength,
        NotReady,
        NoDecision,
        EpochFailed,
        AllWinnersUnreachable,
        HashMismatch,
        TxTooLarge,
        BadRecord,
    };

    ContractError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

enum class Mode : uint8_t { FULL_MATERIAL = 0, HASH_ONLY = 1 };

inline const char* mode_name(Mode m) {
    return m == Mode::FULL_MATERIAL ? "full-material" : "hash-only";
}

struct GasModel {
    uint64_t first_submission_full = 448211;
    uint64_t other_submission_full = 83809;
    uint64_t first_submission_hash = 91322;
    uint64_t other_submission_hash = 42636;
    uint64_t block_gas_limit = 10'000'000;
    uint32_t block_time_seconds = 15;
    double gwei_per_gas = 14.8;
    double usd_per_gwei = 186e-9;

    void validate() const {
        if (!first_submission_full || !other_submission_full || !first_submission_hash ||
            !other_submission_hash || !block_gas_limit || !block_time_seconds)
            throw ContractError(ContractError::Kind::BadRecord, "gas model fields must be positive");
        if (first_submission_full <= other_submission_full ||
            first_submission_hash <= other_submission_hash)
            throw ContractError(ContractError::Kind::BadRecord,
                                "first submission must cost more than the others");
        if (gwei_per_gas <= 0 || usd_per_gwei <= 0)
            throw ContractError(ContractError::Kind::BadRecord, "prices must be positive");
    }

    uint64_t first_submission(Mode m) const {
        return m == Mode::FULL_MATERIAL ? first_submission_full : first_submission_hash;
    }
    uint64_t other_submission(Mode m) const {
        return m == Mode::FULL_MATERIAL ? other_submission_full : other_submission_hash;
    }

    // Whole cents, truncated toward zero. Internally scaled-integer:
    // milli-gwei per gas and pico-dollars per gwei keep the arithmetic exact
    // for prices with <= 3 and <= 12 decimal places respectively.
    uint64_t fiat_cents(uint64_t gas) const {
        const unsigned long long milli_gwei = static_cast<unsigned long long>(gwei_per_gas * 1000.0 + 0.5);
        const unsigned long long pico_usd = static_cast<unsigned long long>(usd_per_gwei * 1e12 + 0.5);
        unsigned __int128 p = static_cast<unsigned __int128>(gas) * milli_gwei * pico_usd;
        return static_cast<uint64_t>(p / 10'000'000'000'000ull);  // 1e13: milli*pico*[$->cents]
    }
};

struct TxRecord {
    enum class Kind : uint8_t { Init = 1, Submit = 2, Decide = 3, Blacklist = 4, NextEpoch = 5 };

    uint64_t index = 0;
    uint64_t epoch = 0;
    Kind kind = Kind::Init;
    AccountId account{};  // submitter or caller
    Bytes payload;
    uint64_t gas_charged = 0;
    uint32_t block_index = 0;
    Hash prev_hash{};
    Hash record_hash{};

    Bytes canonical_preimage() const {
        Bytes b;
        put_u64le(b, index);
        put_u64le(b, epoch);
        b.push_back(static_cast<uint8_t>(kind));
        b.insert(b.end(), account.begin(), account.end());
        put_u32le(b, static_cast<uint32_t>(payload.size()));
        b.insert(b.end(), payload.begin(), payload.end());
        put_u64le(b, gas_charged);
        put_u32le(b, block_index);
        b.insert(b.end(), prev_hash.begin(), prev_hash.end());
        return b;
    }
};

inline bool verify_chain(const std::vector<TxRecord>& log) {
    Hash prev{};
    for (const TxRecord& r : log) {
        if (r.prev_hash != prev) return false;
        if (sha256(r.canonical_preimage()) != r.record_hash) return false;
        prev = r.record_hash;
    }
    return true;
}

struct SubmissionRecord {
    AccountId account{};
    Bytes payload;
    uint64_t gas_charged = 0;
    uint32_t block_index = 0;
};

struct Decision {
    std::optional<Hash> winning_hash;  // absent on a tie
    bool strict_majority = false;
    bool via_timeout = false;
    std::set<AccountId> winner_accounts;
    std::set<AccountId> loser_accounts;  // divergent submitters plus timeout no-shows
};

class Contract {
  public:
    static Contract init(const std::vector<AccountId>& accounts, Mode mode, GasModel model = {},
                         uint32_t epoch_timeout_seconds = 100) {
        model.validate();
        if (accounts.empty())
            throw ContractError(ContractError::Kind::EmptyAccounts, "no accounts registered");
        std::set<AccountId> unique(accounts.begin(), accounts.end());
        if (unique.size() != accounts.size())
            throw ContractError(ContractError::Kind::DuplicateAccount, "duplicate account");

        Contract c;
        c.model_ = model;
        c.timeout_seconds_ = epoch_timeout_seconds;
        TxRecord genesis;
        genesis.kind = TxRecord::Kind::Init;
        genesis.epoch = 1;
        genesis.payload.push_back(static_cast<uint8_t>(mode));
        put_u32le(genesis.payload, epoch_timeout_seconds);
        put_u32le(genesis.payload, static_cast<uint32_t>(unique.size()));
        for (const AccountId& a : unique)
            genesis.payload.insert(genesis.payload.end(), a.begin(), a.end());
        c.append(genesis);
        c.apply(c.log_.back());
        return c;
    }

    // --- reads: open to anyone -----------------------------------------
    Mode mode() const { return mode_; }
    uint64_t epoch() const { return epoch_; }
    const GasModel& gas_model() const { return model_; }
    const std::set<AccountId>& registered_accounts() const { return registered_; }
    const std::set<AccountId>& blacklist() const { return blacklist_; }
    const std::map<AccountId, SubmissionRecord>& submissions() const { return submissions_; }
    const std::map<Hash, uint32_t>& tallies() const { return tallies_; }
    const std::optional<Decision>& decision() const { return decision_; }
    const std::vector<TxRecord>& tx_log() const { return log_; }
    uint32_t now_seconds() const { return now_seconds_; }

    size_t active_count() const { return registered_.size() - blacklist_.size(); }
    size_t expected_submissions() const { return active_count(); }
    size_t payload_size() const { return mode_ == Mode::FULL_MATERIAL ? kMaterialSize : kHashSize; }

    // The environment clock; not contract state.
    void advance_time(uint32_t seconds) {
        std::lock_guard<std::mutex> lock(*mu_);
        now_seconds_ += seconds;
    }

    // --- mutating entry points: caller-checked ---------------------------
    TxRecord submit(const AccountId& caller, const Bytes& payload) {
        std::lock_guard<std::mutex> lock(*mu_);
        require_active(caller);
        if (decision_)
            throw ContractError(ContractError::Kind::EpochClosed, "epoch already decided");
        if (submissions_.count(caller))
            throw ContractError(ContractError::Kind::DoubleSubmission,
                                account_hex(caller) + " already submitted this epoch");
        if (payload.size() != payload_size())
            throw ContractError(ContractError::Kind::WrongPayloadLength,
                                "payload must be " + std::to_string(payload_size()) + " bytes");

        Hash key = submission_key(payload);
        bool first_store = tallies_.find(key) == tallies_.end();
        uint64_t gas = first_store ? model_.first_submission(mode_) : model_.other_submission(mode_);

        TxRecord r;
        r.kind = TxRecord::Kind::Submit;
        r.epoch = epoch_;
        r.account = caller;
        r.payload = payload;
        r.gas_charged = gas;
        r.block_index = peek_block(gas);
        append(r);
        apply(log_.back());
        TxRecord submitted = log_.back();

        // The decision is taken automatically with the last expected
        // submission.
        if (!decision_ && submissions_.size() == expected_submissions()) record_decision(false);
        return submitted;
    }

    Decision decide_majority(const AccountId& caller) {
        std::lock_guard<std::mutex> lock(*mu_);
        require_active(caller);
        if (decision_) return *decision_;
        if (submissions_.size() < expected_submissions())
            throw ContractError(ContractError::Kind::NotReady,
                                std::to_string(submissions_.size()) + " of " +
                                    std::to_string(expected_submissions()) +
                                    " submissions received");
        record_decision(false);
        return *decision_;
    }

    // After the deadline, missing accounts count as losers and the decision
    // proceeds when a strict majority exists among what arrived (subject to
    // the quorum: at least ceil(active/2) received).
    Decision timeout_epoch(const AccountId& caller) {
        std::lock_guard<std::mutex> lock(*mu_);
        require_active(caller);
        if (decision_) return *decision_;
        if (now_seconds_ < epoch_started_at_ + timeout_seconds_)
            throw ContractError(ContractError::Kind::NotReady, "epoch deadline not reached");
        record_decision(true);
        return *decision_;
    }

    void blacklist_losers(const AccountId& caller) {
        std::lock_guard<std::mutex> lock(*mu_);
        require_active(caller);
        if (!decision_)
            throw ContractError(ContractError::Kind::NoDecision, "no decision this epoch");
        if (!decision_->strict_majority)
            throw ContractError(ContractError::Kind::EpochFailed,
                                "failed epoch: nothing to blacklist against");
        TxRecord r;
        r.kind = TxRecord::Kind::Blacklist;
        r.epoch = epoch_;
        r.account = caller;
        for (const AccountId& a : decision_->loser_accounts)
            r.payload.insert(r.payload.end(), a.begin(), a.end());
        append(r);
        apply(log_.back());
    }

    void next_epoch(const AccountId& caller) {
        std::lock_guard<std::mutex> lock(*mu_);
        require_active(caller);
        TxRecord r;
        r.kind = TxRecord::Kind::NextEpoch;
        r.epoch = epoch_;
        r.account = caller;
        append(r);
        apply(log_.back());
    }

    // --- majority material retrieval -------------------------------------

    struct FetchResult {
        SigningMaterial material;
        AccountId served_by{};
        std::vector<AccountId> flagged;  // winners that served inconsistent bytes
    };

    // FULL_MATERIAL: straight from contract storage. HASH_ONLY: ask the
    // winner accounts in account order until one serves material whose
    // measurement matches the winning hash; inconsistent servers are flagged
    // and skipped.
    template <typename NodeFetch>
    FetchResult fetch_majority_material(NodeFetch&& fetch_from_node) const {
        if (!decision_)
            throw ContractError(ContractError::Kind::NoDecision, "no decision this epoch");
        if (!decision_->strict_majority || !decision_->winning_hash)
            throw ContractError(ContractError::Kind::EpochFailed,
                                "failed epoch: no majority material");
        FetchResult out;
        if (mode_ == Mode::FULL_MATERIAL) {
            for (const auto& [account, sub] : submissions_) {
                if (submission_key(sub.payload) == *decision_->winning_hash) {
                    out.material = SigningMaterial::from_bytes(sub.payload);
                    out.served_by = account;
                    return out;
                }
            }
            throw ContractError(ContractError::Kind::NoDecision, "winning material not in storage");
        }
        for (const AccountId& account : decision_->winner_accounts) {
            std::optional<SigningMaterial> m = fetch_from_node(account);
            if (!m) continue;  // unreachable node: try the next winner
            if (!(Hash(m->measurement.digest) == *decision_->winning_hash)) {
                out.flagged.push_back(account);
                continue;
            }
            out.material = *m;
            out.served_by = account;
            return out;
        }
        throw ContractError(ContractError::Kind::AllWinnersUnreachable,
                            "no winner served consistent material");
    }

    FetchResult fetch_majority_material() const {
        return fetch_majority_material(
            [](const AccountId&) -> std::optional<SigningMaterial> { return std::nullopt; });
    }

    // --- ledger ----------------------------------------------------------

    // Rebuilds a contract purely from a log. Throws on a broken chain.
    static Contract replay(const std::vector<TxRecord>& log) {
        if (!verify_chain(log))
            throw ContractError(ContractError::Kind::BadRecord, "ledger chain check failed");
        Contract c;
        for (const TxRecord& r : log) {
            if (r.kind == TxRecord::Kind::Init) {
                c.model_ = GasModel{};  // gas model is configuration, not ledger state
            }
            c.log_.push_back(r);
            c.apply(r);
        }
        return c;
    }

    // Canonical text dump of the contract state; replay equality is stated
    // over this string. Takes the writer lock, so concurrent readers get a
    // consistent snapshot.
    std::string state_digest_text() const {
        std::lock_guard<std::mutex> lock(*mu_);
        return state_digest_text_unlocked();
    }

    std::string state_digest_text_unlocked() const {
        std::string s;
        s += "mode=" + std::string(mode_name(mode_)) + "\n";
        s += "epoch=" + std::to_string(epoch_) + "\n";
        s += "timeout=" + std::to_string(timeout_seconds_) + "\n";
        s += "registered=";
        for (const AccountId& a : registered_) s += account_hex(a) + ",";
        s += "\nblacklist=";
        for (const AccountId& a : blacklist_) s += account_hex(a) + ",";
        s += "\nsubmissions=";
        for (const auto& [a, sub] : submissions_) {
            s += account_hex(a) + ":" + to_hex(sub.payload) + ":" + std::to_string(sub.gas_charged) +
                 ":" + std::to_string(sub.block_index) + ";";
        }
        s += "\ntallies=";
        for (const auto& [h, n] : tallies_) s += to_hex(h) + ":" + std::to_string(n) + ";";
        s += "\ndecision=";
        if (decision_) {
            s += decision_->winning_hash ? to_hex(*decision_->winning_hash) : std::string("tie");
            s += decision_->strict_majority ? ":strict" : ":no-majority";
            s += decision_->via_timeout ? ":timeout" : "";
            s += ":losers=";
            for (const AccountId& a : decision_->loser_accounts) s += account_hex(a) + ",";
        } else {
            s += "none";
        }
        s += "\ntx_count=" + std::to_string(log_.size()) + "\n";
        return s;
    }

  private:
    Hash submission_key(const Bytes& payload) const {
        if (mode_ == Mode::HASH_ONLY) {
            Hash h{};
            std::copy(payload.begin(), payload.end(), h.begin());
            return h;  // the payload is the measurement itself
        }
        return sha256(payload);
    }

    void require_active(const AccountId& caller) const {
        if (!registered_.count(caller))
            throw ContractError(ContractError::Kind::UnknownAccount,
                                "unknown account " + account_hex(caller));
        if (blacklist_.count(caller))
            throw ContractError(ContractError::Kind::Blacklisted,
                                account_hex(caller) + " is blacklisted");
    }

    // Block placement is previewed when the record is built and applied in
    // apply(), so a replay reconstructs the packing state exactly.
    uint32_t peek_block(uint64_t gas) const {
        if (gas > model_.block_gas_limit)
            throw ContractError(ContractError::Kind::TxTooLarge, "tx exceeds block gas limit");
        return block_gas_used_ + gas > model_.block_gas_limit ? current_block_ + 1
                                                              : current_block_;
    }

    void record_decision(bool via_timeout) {
        TxRecord r;
        r.kind = TxRecord::Kind::Decide;
        r.epoch = epoch_;
        r.payload.push_back(via_timeout ? 1 : 0);
        append(r);
        apply(log_.back());
    }

    void append(TxRecord r) {
        r.index = log_.size();
        r.prev_hash = log_.empty() ? Hash{} : log_.back().record_hash;
        r.record_hash = sha256(r.canonical_preimage());
        log_.push_back(std::move(r));
    }

    // State transitions are driven exclusively by records so replay is the
    // same code path as live execution.
    void apply(const TxRecord& r) {
        switch (r.kind) {
            case TxRecord::Kind::Init: {
                mode_ = static_cast<Mode>(r.payload.at(0));
                timeout_seconds_ = get_u32le(r.payload, 1);
                uint32_t n = get_u32le(r.payload, 5);
                size_t off = 9;
                for (uint32_t i = 0; i < n; ++i) {
                    AccountId a{};
                    std::copy(r.payload.begin() + static_cast<ptrdiff_t>(off),
                              r.payload.begin() + static_cast<ptrdiff_t>(off + 20), a.begin());
                    registered_.insert(a);
                    off += 20;
                }
                epoch_ = 1;
                break;
            }
            case TxRecord::Kind::Submit: {
                SubmissionRecord sub;
                sub.account = r.account;
                sub.payload = r.payload;
                sub.gas_charged = r.gas_charged;
                sub.block_index = r.block_index;
                submissions_[r.account] = std::move(sub);
                ++tallies_[submission_key(r.payload)];
                if (r.block_index != current_block_) {
                    current_block_ = r.block_index;
                    block_gas_used_ = 0;
                }
                block_gas_used_ += r.gas_charged;
                break;
            }
            case TxRecord::Kind::Decide: {
                Decision d;
                d.via_timeout = r.payload.at(0) != 0;
                // argmax with tie detection
                uint32_t best = 0, second = 0;
                std::optional<Hash> best_hash;
                for (const auto& [h, n] : tallies_) {
                    if (n > best) {
                        second = best;
                        best = n;
                        best_hash = h;
                    } else if (n >= second) {
                        second = n;
                    }
                }
                size_t n_expected = expected_submissions();
                bool tie = best_hash && best == second;
                if (!tie && best_hash) {
                    d.winning_hash = best_hash;
                    d.strict_majority = best > n_expected / 2;
                    if (d.via_timeout) {
                        size_t received = submissions_.size();
                        size_t quorum = (active_count() + 1) / 2;
                        d.strict_majority = received >= quorum && best > received / 2;
                    }
                    for (const auto& [acct, sub] : submissions_) {
                        if (submission_key(sub.payload) == *d.winning_hash)
                            d.winner_accounts.insert(acct);
                        else
                            d.loser_accounts.insert(acct);
                    }
                    if (d.via_timeout) {
                        for (const AccountId& a : registered_) {
                            if (!blacklist_.count(a) && !submissions_.count(a))
                                d.loser_accounts.insert(a);  // no-shows
                        }
                    }
                } else {
                    d.strict_majority = false;  // tie (or nothing): fail closed
                    for (const auto& [acct, sub] : submissions_) {
                        (void)sub;
                        d.loser_accounts.insert(acct);
                    }
                }
                decision_ = std::move(d);
                break;
            }
            case TxRecord::Kind::Blacklist: {
                for (size_t off = 0; off + 20 <= r.payload.size(); off += 20) {
                    AccountId a{};
                    std::copy(r.payload.begin() + static_cast<ptrdiff_t>(off),
                              r.payload.begin() + static_cast<ptrdiff_t>(off + 20), a.begin());
                    blacklist_.insert(a);
                }
                break;
            }
            case TxRecord::Kind::NextEpoch: {
                ++epoch_;
                submissions_.clear();
                tallies_.clear();
                decision_.reset();
                epoch_started_at_ = now_seconds_;
                break;
            }
        }
    }

    // Serializes the mutating entry points: concurrent callers are ordered
    // by whoever appends to the ledger first. Owned by pointer so contracts
    // stay movable.
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    Mode mode_ = Mode::FULL_MATERIAL;
    GasModel model_;
    uint32_t timeout_seconds_ = 100;
    std::set<AccountId> registered_;
    std::set<AccountId> blacklist_;
    uint64_t epoch_ = 0;
    std::map<AccountId, SubmissionRecord> submissions_;
    std::map<Hash, uint32_t> tallies_;
    std::optional<Decision> decision_;
    std::vector<TxRecord> log_;
    uint32_t current_block_ = 0;
    uint64_t block_gas_used_ = 0;
    uint32_t now_seconds_ = 0;
    uint32_t epoch_started_at_ = 0;
};

// ---------------------------------------------------------------------------
// Cost and block reporting

struct CostLine {
    AccountId account{};
    uint64_t gas = 0;
    uint64_t fiat_cents = 0;
};

struct CostReport {
    uint64_t epoch = 0;
    Mode mode = Mode::FULL_MATERIAL;
    std::vector<CostLine> lines;      // in submission (ledger) order
    uint64_t total_gas = 0;
    uint64_t total_cents = 0;         // sum of the truncated per-tx values
    uint64_t marginal_node_cents = 0; // one more honest node
    uint64_t baseline_10_node_cents = 0;  // all-honest 10-node epoch

    std::string text() const {
        char buf[160];
        std::string s = "cost report (epoch " + std::to_string(epoch) + ", " + mode_name(mode) +
                        ")\n";
        for (const CostLine& l : lines) {
            std::snprintf(buf, sizeof buf, "  %s  gas %8llu  $%llu.%02llu\n",
                          account_hex(l.account).c_str(),
                          static_cast<unsigned long long>(l.gas),
                          static_cast<unsigned long long>(l.fiat_cents / 100),
                          static_cast<unsigned long long>(l.fiat_cents % 100));
            s += buf;
        }
        std::snprintf(buf, sizeof buf, "  epoch total: %llu gas, $%llu.%02llu\n",
                      static_cast<unsigned long long>(total_gas),
                      static_cast<unsigned long long>(total_cents / 100),
                      static_cast<unsigned long long>(total_cents % 100));
        s += buf;
        std::snprintf(buf, sizeof buf, "  marginal cost per additional node: $%llu.%02llu\n",
                      static_cast<unsigned long long>(marginal_node_cents / 100),
                      static_cast<unsigned long long>(marginal_node_cents % 100));
        s += buf;
        std::snprintf(buf, sizeof buf, "  10-node all-honest baseline: total $%llu.%02llu\n",
                      static_cast<unsigned long long>(baseline_10_node_cents / 100),
                      static_cast<unsigned long long>(baseline_10_node_cents % 100));
        s += buf;
        return s;
    }
};

inline CostReport gas_and_fiat_report(const Contract& contract, const GasModel& model,
                                      uint64_t epoch = 0) {
    CostReport rep;
    rep.epoch = epoch == 0 ? contract.epoch() : epoch;
    rep.mode = contract.mode();
    for (const TxRecord& r : contract.tx_log()) {
        if (r.kind != TxRecord::Kind::Submit || r.epoch != rep.epoch) continue;
        CostLine l;
        l.account = r.account;
        l.gas = r.gas_charged;
        l.fiat_cents = model.fiat_cents(r.gas_charged);
        rep.total_gas += l.gas;
        rep.total_cents += l.fiat_cents;
        rep.lines.push_back(l);
    }
    rep.marginal_node_cents = model.fiat_cents(model.other_submission(contract.mode()));
    rep.baseline_10_node_cents = model.fiat_cents(model.first_submission(contract.mode())) +
                                 9 * model.fiat_cents(model.other_submission(contract.mode()));
    return rep;
}

struct BlockReport {
    uint32_t blocks = 0;
    uint32_t confirmation_seconds = 0;
    double lambda = 0;

    std::string text() const {
        char buf[120];
        std::snprintf(buf, sizeof buf,
                      "block report: %u block(s) at lambda=%.2f, confirmation %u s\n", blocks,
                      lambda, confirmation_seconds);
        return buf;
    }
};

// Sequential first-fit packing of the epoch's submission gas into blocks.
// lambda in [0,1) reserves that share of every block for foreign traffic.
inline BlockReport pack_blocks(const std::vector<TxRecord>& log, const GasModel& model,
                               double lambda = 0.0) {
    if (lambda < 0 || lambda >= 1)
        throw ContractError(ContractError::Kind::BadRecord, "lambda must be in [0,1)");
    uint64_t capacity =
        model.block_gas_limit - static_cast<uint64_t>(lambda * static_cast<double>(model.block_gas_limit));
    BlockReport rep;
    rep.lambda = lambda;
    uint64_t used = 0;
    bool any = false;
    for (const TxRecord& r : log) {
        if (r.kind != TxRecord::Kind::Submit) continue;
        if (r.gas_charged > capacity)
            throw ContractError(ContractError::Kind::TxTooLarge,
                                "tx gas " + std::to_string(r.gas_charged) +
                                    " exceeds per-block capacity " + std::to_string(capacity));
        if (!any) {
            rep.blocks = 1;
            any = true;
        }
        if (used + r.gas_charged > capacity) {
            ++rep.blocks;
            used = 0;
        }
        used += r.gas_charged;
    }
    rep.confirmation_seconds = rep.blocks * model.block_time_seconds;
    return rep;
}

}  // namespace setsim::chain
