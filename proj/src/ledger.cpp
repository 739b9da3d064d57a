#include "fcm/ledger.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fcm/io_util.hpp"

namespace fcm {

using json = nlohmann::ordered_json;

std::string settlement_to_json(const SettlementRecord& r) {
    json j;
    j["t"] = r.t;
    j["session"] = r.session_id;
    j["alpha"] = r.alpha;
    j["y"] = r.y;
    j["utility"] = r.utility;
    j["totals"] = r.totals;
    j["slices"] = json::array();
    for (const auto& s : r.slices) {
        json js;
        js["h"] = s.horizon;
        js["tau"] = s.tau;
        js["x"] = s.submissions;
        js["combined"] = s.combined;
        js["is"] = s.in_sample;
        js["oos"] = s.out_sample;
        js["reward"] = s.reward;
        js["w"] = s.weights;
        js["D"] = s.correction;
        js["phi_c"] = s.phi_c;
        j["slices"].push_back(std::move(js));
    }
    return j.dump();
}

SettlementRecord settlement_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed ledger line: ") + e.what());
    }
    try {
        SettlementRecord r;
        r.t = j.at("t").get<std::int64_t>();
        r.session_id = j.at("session").get<std::string>();
        r.alpha = j.at("alpha").get<std::vector<std::uint8_t>>();
        r.y = j.at("y").get<Vec>();
        r.utility = j.at("utility").get<double>();
        r.totals = j.at("totals").get<Vec>();
        for (const auto& js : j.at("slices")) {
            SliceRecord s;
            s.horizon = js.at("h").get<int>();
            s.tau = js.at("tau").get<double>();
            s.submissions = js.at("x").get<Vec>();
            s.combined = js.at("combined").get<double>();
            s.in_sample = js.at("is").get<Vec>();
            s.out_sample = js.at("oos").get<Vec>();
            s.reward = js.at("reward").get<Vec>();
            s.weights = js.at("w").get<Vec>();
            s.correction = js.at("D").get<Vec>();
            s.phi_c = js.at("phi_c").get<Vec>();
            r.slices.push_back(std::move(s));
        }
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ledger line missing fields: ") + e.what());
    }
}

std::string ledger_to_jsonl(const Ledger& ledger) {
    std::string out;
    for (const auto& r : ledger) {
        out += settlement_to_json(r);
        out += '\n';
    }
    return out;
}

Ledger ledger_from_jsonl(const std::string& text) {
    Ledger ledger;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ledger.push_back(settlement_from_json(line));
    }
    return ledger;
}

void write_ledger_file(const std::string& path, const Ledger& ledger) {
    write_file_atomic(path, ledger_to_jsonl(ledger));
}

Ledger read_ledger_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open ledger file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return ledger_from_jsonl(buf.str());
}

namespace {

void check_equal(std::size_t idx, const Vec& got, const Vec& want, const char* what) {
    if (got != want)
        throw ReplayError(idx, std::string(what) +
                                   " diverged from the recorded snapshot (gap or corrupted record)");
}

}  // namespace

std::unique_ptr<Market> replay_ledger(const Ledger& records, MarketTask task,
                                      std::vector<std::string> sellers, EngineSettings engine,
                                      AllocationConfig alloc, std::uint64_t seed) {
    auto market = std::make_unique<Market>(std::move(task), std::move(sellers), engine, alloc,
                                           seed);
    const std::size_t n = market->registry().size();
    const std::size_t slices = market->slice_count();
    std::int64_t prev_t = -1;

    for (std::size_t idx = 0; idx < records.size(); ++idx) {
        const SettlementRecord& rec = records[idx];
        if (idx > 0 && rec.t <= prev_t)
            throw ReplayError(idx, "records are out of time order");
        if (rec.alpha.size() != n)
            throw ReplayError(idx, "availability vector size differs from the seller roster");
        if (rec.slices.size() != slices)
            throw ReplayError(idx, "slice count differs from the task definition");

        market->open_session(rec.t);
        for (std::size_t i = 0; i < n; ++i) {
            if (rec.alpha[i]) continue;
            Vec values(slices, 0.0);
            for (std::size_t s = 0; s < slices; ++s) values[s] = rec.slices[s].submissions[i];
            market->submit(market->registry().ids()[i], values);
        }
        const Session& closed = market->close_session();
        if (closed.alpha.bits() != rec.alpha)
            throw ReplayError(idx, "reconstructed availability differs from the record");
        const SettlementRecord& replayed = market->settle(rec.y, rec.utility);

        check_equal(idx, replayed.totals, rec.totals, "per-seller totals");
        for (std::size_t s = 0; s < slices; ++s) {
            if (replayed.slices[s].combined != rec.slices[s].combined)
                throw ReplayError(idx, "combined forecast diverged (gap or corrupted record)");
            check_equal(idx, replayed.slices[s].weights, rec.slices[s].weights, "weights");
            check_equal(idx, replayed.slices[s].correction, rec.slices[s].correction,
                        "correction matrix");
            check_equal(idx, replayed.slices[s].phi_c, rec.slices[s].phi_c, "recursive Shapley");
        }
        prev_t = rec.t;
    }
    return market;
}

}  // namespace fcm
