#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rd/canonical.hpp"
#include "rd/genesis.hpp"
#include "rd/transaction.hpp"

namespace rd {

struct Block {
  std::uint64_t height = 0;
  Digest prev_digest{};
  std::uint64_t timestamp = 0;  // ms since epoch
  std::vector<Transaction> txs;
  Digest digest{};
  bool operator==(const Block&) const = default;
};

inline Json block_body_json(std::uint64_t height, const Digest& prev, std::uint64_t timestamp,
                            const std::vector<Transaction>& txs) {
  Json arr = Json::array();
  for (const auto& tx : txs) arr.push_back(to_json(tx));
  return Json{{"height", height}, {"prev_digest", to_hex(prev)}, {"timestamp", timestamp}, {"txs", std::move(arr)}};
}

inline Digest compute_block_digest(const Block& b) {
  return sha256(canonical_encode(block_body_json(b.height, b.prev_digest, b.timestamp, b.txs)));
}

inline Json to_json(const Block& b) {
  Json j = block_body_json(b.height, b.prev_digest, b.timestamp, b.txs);
  j["digest"] = to_hex(b.digest);
  return j;
}

inline Block block_from_json(const Json& j) {
  detail::exact_keys(j, 5);
  Block b;
  b.height = detail::uint_field(j, "height");
  b.prev_digest = digest_from_hex(detail::string_field(j, "prev_digest"));
  b.timestamp = detail::uint_field(j, "timestamp");
  b.digest = digest_from_hex(detail::string_field(j, "digest"));
  const Json& txs = detail::field(j, "txs");
  if (!txs.is_array()) throw Error(ErrorCode::Malformed, "txs must be an array");
  for (const auto& tx : txs) b.txs.push_back(transaction_from_json(tx));
  return b;
}

/// Append-only, digest-linked block list for one chain. Values are
/// immutable from the outside; append_block returns a new chain.
class Chain {
 public:
  Chain() = default;
  explicit Chain(ChainId id) : chain_id_(id) {}

  ChainId chain_id() const { return chain_id_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  bool empty() const { return blocks_.empty(); }
  std::size_t size() const { return blocks_.size(); }
  const Block& tip() const { return blocks_.back(); }

  /// Highest nonce seen for `submitter`, if any.
  std::optional<std::uint64_t> last_nonce(const std::string& submitter) const {
    auto it = last_nonce_.find(submitter);
    if (it == last_nonce_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t transaction_count() const { return tx_count_; }

  /// Builds a chain from already-existing blocks without checking them;
  /// use verify_chain on the result.
  static Chain from_blocks(ChainId id, std::vector<Block> blocks) {
    Chain c(id);
    for (auto& b : blocks) c.push_unchecked(std::move(b));
    return c;
  }

  bool operator==(const Chain& o) const { return chain_id_ == o.chain_id_ && blocks_ == o.blocks_; }

 private:
  friend Chain append_block(Chain&&, std::vector<Transaction>, std::uint64_t);

  void push_unchecked(Block b) {
    for (const auto& tx : b.txs) {
      auto [it, inserted] = last_nonce_.try_emplace(tx.submitter, tx.nonce);
      if (!inserted) it->second = std::max(it->second, tx.nonce);
    }
    tx_count_ += b.txs.size();
    blocks_.push_back(std::move(b));
  }

  ChainId chain_id_ = 0;
  std::vector<Block> blocks_;
  std::map<std::string, std::uint64_t> last_nonce_;
  std::uint64_t tx_count_ = 0;
};

/// Appends one block holding `txs`. Throws ClockSkew if `timestamp` is
/// before the tip, NonceReplay on a non-increasing nonce, and
/// InvalidTransaction for an oversized submitter. On error `chain` is left
/// untouched.
inline Chain append_block(Chain&& chain, std::vector<Transaction> txs, std::uint64_t timestamp) {
  if (!chain.empty() && timestamp < chain.tip().timestamp)
    throw Error(ErrorCode::ClockSkew, std::to_string(timestamp) + " < " + std::to_string(chain.tip().timestamp));
  std::map<std::string, std::uint64_t> seen;
  for (const auto& tx : txs) {
    if (tx.submitter.size() > kMaxSubmitterLength) throw Error(ErrorCode::InvalidTransaction, "submitter too long");
    std::optional<std::uint64_t> last;
    if (auto it = seen.find(tx.submitter); it != seen.end()) last = it->second;
    else last = chain.last_nonce(tx.submitter);
    if (last && tx.nonce <= *last)
      throw Error(ErrorCode::NonceReplay, tx.submitter + " nonce " + std::to_string(tx.nonce));
    seen[tx.submitter] = tx.nonce;
  }
  Block b;
  b.height = chain.size();
  if (!chain.empty()) b.prev_digest = chain.tip().digest;
  b.timestamp = timestamp;
  b.txs = std::move(txs);
  b.digest = compute_block_digest(b);  // may throw NonCanonical before any mutation
  chain.push_unchecked(std::move(b));
  return std::move(chain);
}

inline Chain append_block(const Chain& chain, std::vector<Transaction> txs, std::uint64_t timestamp) {
  Chain copy = chain;
  return append_block(std::move(copy), std::move(txs), timestamp);
}

/// Checks linkage, heights, digests, timestamp order and nonce order.
/// The empty chain verifies.
inline bool verify_chain(const Chain& chain) {
  try {
    std::map<std::string, std::uint64_t> nonces;
    const auto& blocks = chain.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Block& b = blocks[i];
      if (b.height != i) return false;
      const Digest expected_prev = i == 0 ? Digest{} : blocks[i - 1].digest;
      if (b.prev_digest != expected_prev) return false;
      if (i > 0 && b.timestamp < blocks[i - 1].timestamp) return false;
      if (compute_block_digest(b) != b.digest) return false;
      for (const auto& tx : b.txs) {
        if (tx.submitter.size() > kMaxSubmitterLength) return false;
        auto [it, inserted] = nonces.try_emplace(tx.submitter, tx.nonce);
        if (!inserted) {
          if (tx.nonce <= it->second) return false;
          it->second = tx.nonce;
        }
      }
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

/// Folds every transaction into contract state, block order then tx order.
inline GenesisState replay(const Chain& chain) {
  if (!verify_chain(chain)) throw Error(ErrorCode::InvalidChain, "chain " + std::to_string(chain.chain_id()));
  GenesisState s = GenesisState::for_chains({chain.chain_id()});
  for (const auto& b : chain.blocks())
    for (const auto& tx : b.txs) s = apply_transaction(std::move(s), tx, b.height);
  return s;
}

// --- persistence ------------------------------------------------------------

/// One canonical Block JSON per line, height order, each line '\n'-terminated.
inline std::string encode_chain_file(const Chain& chain) {
  std::string out;
  for (const auto& b : chain.blocks()) {
    out += canonical_encode(to_json(b));
    out += '\n';
  }
  return out;
}

/// Strict decoding: every line must be exactly the canonical encoding of
/// the block it parses to. Throws Malformed otherwise.
inline Chain decode_chain_file(std::string_view bytes, ChainId id) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw Error(ErrorCode::Malformed, "unterminated final line");
    const std::string_view line = bytes.substr(pos, nl - pos);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::Malformed, std::string("line ") + std::to_string(blocks.size()) + ": " + e.what());
    }
    Block b = block_from_json(j);
    std::string reencoded;
    try {
      reencoded = canonical_encode(to_json(b));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::Malformed, e.what());
    }
    if (reencoded != line) throw Error(ErrorCode::Malformed, "non-canonical line " + std::to_string(blocks.size()));
    blocks.push_back(std::move(b));
    pos = nl + 1;
  }
  return Chain::from_blocks(id, std::move(blocks));
}

/// Decodes and verifies in one step; any decoding failure counts as invalid.
inline bool verify_chain_bytes(std::string_view bytes) {
  try {
    return verify_chain(decode_chain_file(bytes, 0));
  } catch (const std::exception&) {
    return false;
  }
}

inline std::string chain_file_name(ChainId id) { return "chain_" + std::to_string(id) + ".ndjson"; }

/// Chain id parsed from a `chain_<id>.ndjson` file name; 0 otherwise.
inline ChainId chain_id_from_path(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  constexpr std::string_view prefix = "chain_", suffix = ".ndjson";
  if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) || !name.ends_with(suffix)) return 0;
  ChainId id = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size() - suffix.size();
  auto [ptr, ec] = std::from_chars(first, last, id);
  return ec == std::errc{} && ptr == last ? id : 0;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Chain load_chain(const std::filesystem::path& path) {
  return decode_chain_file(read_file(path), chain_id_from_path(path));
}

inline std::filesystem::path save_chain(const std::filesystem::path& dir, const Chain& chain) {
  std::filesystem::create_directories(dir);
  auto path = dir / chain_file_name(chain.chain_id());
  write_file(path, encode_chain_file(chain));
  return path;
}

}  // namespace rd
