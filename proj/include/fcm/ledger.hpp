#pragma once

#include <memory>
#include <string>

#include "fcm/session.hpp"

namespace fcm {

// One settlement per line, JSON with shortest round-trip number rendering,
// so a written ledger parses back to bit-identical state.
std::string settlement_to_json(const SettlementRecord& record);
SettlementRecord settlement_from_json(const std::string& line);

std::string ledger_to_jsonl(const Ledger& ledger);
Ledger ledger_from_jsonl(const std::string& text);

void write_ledger_file(const std::string& path, const Ledger& ledger);
Ledger read_ledger_file(const std::string& path);

// Rebuilds a market by replaying settlement records in order through the
// live code path, cross-checking every reconstructed snapshot against the
// record. Throws ReplayError (with the failing record index) on gaps,
// out-of-order records, or state mismatches. Records must come from a
// market constructed with the same task, sellers, and configuration.
std::unique_ptr<Market> replay_ledger(const Ledger& records, MarketTask task,
                                      std::vector<std::string> sellers, EngineSettings engine,
                                      AllocationConfig alloc, std::uint64_t seed = 0);

}  // namespace fcm
