#include <gtest/gtest.h>

#include <filesystem>

#include "rd/ledger.hpp"
#include "rd/rng.hpp"

namespace rd {
namespace {

Transaction upload_tx(const std::string& who, std::uint64_t nonce, int salt = 0) {
  return sign(upload_call(create_base("p" + std::to_string(salt)), Game::RhythmDungeon), who, nonce);
}

Chain build(std::size_t blocks, std::size_t txs_per_block = 1) {
  Chain c(0);
  std::uint64_t nonce = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<Transaction> txs;
    for (std::size_t t = 0; t < txs_per_block; ++t) txs.push_back(upload_tx("alice", nonce++, static_cast<int>(b)));
    c = append_block(std::move(c), std::move(txs), 1000 + b);
  }
  return c;
}

TEST(AppendBlock, GenesisBlock) {
  const Chain c = append_block(Chain(0), {}, 0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.tip().height, 0u);
  EXPECT_EQ(c.tip().prev_digest, Digest{});
  EXPECT_EQ(c.tip().digest, compute_block_digest(c.tip()));
}

TEST(AppendBlock, LinksAndLeavesOriginalUntouched) {
  const Chain one = append_block(Chain(0), {}, 5);
  const Chain two = append_block(one, {upload_tx("bob", 0)}, 6);
  EXPECT_EQ(one.size(), 1u);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two.blocks()[1].prev_digest, two.blocks()[0].digest);
  EXPECT_EQ(two.blocks()[0], one.blocks()[0]);
}

TEST(AppendBlock, Errors) {
  const Chain c = append_block(Chain(0), {upload_tx("bob", 4)}, 100);
  try {
    append_block(c, {}, 99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClockSkew);
  }
  for (std::uint64_t n : {0ULL, 3ULL, 4ULL}) {
    try {
      append_block(c, {upload_tx("bob", n)}, 100);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonceReplay);
    }
  }
  // Duplicate inside one block.
  EXPECT_THROW(append_block(Chain(0), {upload_tx("x", 1), upload_tx("x", 1)}, 0), Error);
  EXPECT_NO_THROW(append_block(c, {upload_tx("bob", 5), upload_tx("carol", 0)}, 100));
  EXPECT_THROW(append_block(c, {upload_tx(std::string(65, 's'), 0)}, 100), Error);
}

TEST(AppendBlock, RejectsFloatPayloads) {
  Transaction t = upload_tx("bob", 0);
  t.payload["extra"] = 1.5;
  EXPECT_THROW(append_block(Chain(0), {t}, 0), Error);
}

TEST(AppendBlock, PurityOfExistingDigests) {
  Chain c = build(5);
  std::vector<Digest> before;
  for (const auto& b : c.blocks()) before.push_back(b.digest);
  c = append_block(std::move(c), {upload_tx("alice", 100)}, 5000);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(c.blocks()[i].digest, before[i]);
}

TEST(VerifyChain, Examples) {
  EXPECT_TRUE(verify_chain(Chain(0)));
  const Chain c = build(10);
  EXPECT_TRUE(verify_chain(c));

  auto blocks = c.blocks();
  blocks[3].txs[0].payload["character"]["name"] = "p4";
  EXPECT_FALSE(verify_chain(Chain::from_blocks(0, blocks)));

  blocks = c.blocks();
  blocks[3].timestamp = 0;
  EXPECT_FALSE(verify_chain(Chain::from_blocks(0, blocks)));

  blocks = c.blocks();
  blocks.erase(blocks.begin() + 4);
  EXPECT_FALSE(verify_chain(Chain::from_blocks(0, blocks)));
}

TEST(VerifyChain, DetectsDigestAndNonceForgery) {
  // Re-sealing a block with a replayed nonce still fails verification.
  auto blocks = build(3).blocks();
  blocks[2].txs[0].nonce = 0;
  blocks[2].digest = compute_block_digest(blocks[2]);
  EXPECT_FALSE(verify_chain(Chain::from_blocks(0, blocks)));
}

TEST(Replay, EmptySingleAndDeterministic) {
  const auto empty = replay(Chain(0));
  EXPECT_TRUE(empty.characters.empty());
  EXPECT_EQ(empty.defeats(0), 0u);

  const auto one = replay(append_block(Chain(0), {upload_tx("a", 0)}, 0));
  EXPECT_EQ(one.characters.size(), 1u);

  const Chain c = build(20, 5);
  EXPECT_EQ(c.transaction_count(), 100u);
  EXPECT_EQ(state_digest(replay(c)), state_digest(replay(c)));
}

TEST(Replay, InvalidChainThrows) {
  auto blocks = build(3).blocks();
  blocks[1].timestamp += 1;
  try {
    replay(Chain::from_blocks(0, blocks));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidChain);
  }
}

TEST(Replay, PrefixConsistency) {
  SplitMix64 g{3};
  Chain c(2);
  GenesisState folded = GenesisState::for_chains({2});
  std::uint64_t nonce = 0;
  std::uint64_t defeats = 0;
  for (int b = 0; b < 40; ++b) {
    std::vector<Transaction> txs;
    for (std::uint64_t k = g.below(4); k > 0; --k) {
      Call call;
      switch (g.below(3)) {
        case 0: call = upload_call(grant_xp(create_base("u"), g.below(400)), kGames[g.below(3)]); break;
        case 1: call = defeat_call(2, ++defeats); break;
        default: call = growth_call(2, kAttributes[g.below(4)]); break;
      }
      txs.push_back(sign(std::move(call), "w", nonce++));
    }
    for (const auto& t : txs) folded = apply_transaction(std::move(folded), t, static_cast<std::uint64_t>(b));
    c = append_block(std::move(c), std::move(txs), static_cast<std::uint64_t>(b));
    ASSERT_EQ(replay(c), folded) << "prefix " << b;
    ASSERT_EQ(state_digest(replay(c)), state_digest(folded));
  }
}

TEST(ChainFile, RoundTripAndStrictness) {
  const Chain c = build(6, 2);
  const std::string bytes = encode_chain_file(c);
  EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '\n'), 6);
  EXPECT_EQ(decode_chain_file(bytes, 0), c);
  EXPECT_EQ(encode_chain_file(decode_chain_file(bytes, 0)), bytes);
  EXPECT_TRUE(verify_chain_bytes(bytes));
  EXPECT_TRUE(verify_chain_bytes(""));

  EXPECT_FALSE(verify_chain_bytes(bytes.substr(0, bytes.size() - 1)));
  std::string spaced = bytes;
  spaced.insert(1, " ");
  EXPECT_FALSE(verify_chain_bytes(spaced));
}

TEST(ChainFile, EverySingleByteFlipFails) {
  const std::string bytes = encode_chain_file(build(3));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string t = bytes;
    t[i] = static_cast<char>(t[i] ^ 0x01);
    ASSERT_FALSE(verify_chain_bytes(t)) << "offset " << i;
  }
}

TEST(ChainFile, SaveLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "rd_ledger_test";
  std::filesystem::remove_all(dir);
  Chain c(7);
  c = append_block(std::move(c), {upload_tx("z", 0)}, 1);
  const auto path = save_chain(dir, c);
  EXPECT_EQ(path.filename(), "chain_7.ndjson");
  EXPECT_EQ(chain_id_from_path(path), 7u);
  EXPECT_EQ(load_chain(path), c);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace rd
