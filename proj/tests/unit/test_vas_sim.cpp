#include "doctest.h"
#include "oracle/replay_oracle.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"
#include "tuition/ingest.hpp"
#include "tuition/reports.hpp"
#include "tuition/vas_sim.hpp"

using namespace tuition;
using namespace tuition::sim;
using namespace fixtures;

namespace {

ScenarioConfig small(std::size_t students, std::vector<Paycode> codes = {Paycode::Bill1}) {
  ScenarioConfig c;
  c.students = students;
  c.paycodes = std::move(codes);
  c.seed = 42;
  c.scholarship_rate = 0;
  return c;
}

struct Run {
  ManualClock clock;
  std::unique_ptr<store::Store> store = store::Store::in_memory();
  ups::Engine engine{*store, clock};
  ScenarioRun out;

  explicit Run(const ScenarioConfig& c) { out = run_scenario(c, engine, clock); }
};

}  // namespace

TEST_CASE("fault-free scenario: every first-instalment payment succeeds") {
  Run r(small(100));
  CHECK(r.out.result.attempted == 100);
  CHECK(r.out.result.success == 100);
  CHECK(r.out.result.reversed == 0);
  CHECK(r.out.result.orphans == 0);
  CHECK(r.out.result.retries == 0);
  CHECK(r.out.result.max_latency_ms == 2000);
  const auto bal = reports::balance_check(r.store->snapshot_view(), std::nullopt, &r.out.ledger);
  CHECK(bal.delta == Idr{0});
  CHECK(bal.orphans.empty());
  CHECK(bal.ghosts.empty());
  CHECK(bal.vas_total == bal.total_payments);
}

TEST_CASE("a lost acknowledgement is reversed and leaves the bill open") {
  auto c = small(5);
  c.faults.overrides[2] = FaultKind::DropAck;
  Run r(c);
  CHECK(r.out.result.reversed == 1);
  CHECK(r.out.result.success == 4);
  CHECK(r.out.ledger.entries()[2].outcome == VasOutcome::Reversed);
  CHECK(r.store->get_unpaid_bills("2010000003").size() == 2);
  const auto t = reports::transaction_report(r.store->snapshot_view());
  CHECK(t.rows.size() == 6);
  CHECK(reports::balance_check(r.store->snapshot_view(), std::nullopt, &r.out.ledger).balanced());
}

TEST_CASE("a clearing anomaly becomes exactly one orphan") {
  auto c = small(5);
  c.faults.overrides[1] = FaultKind::ClearingAnomaly;
  Run r(c);
  CHECK(r.out.result.wrong_amount == 1);
  CHECK(r.out.result.orphans == 1);
  const auto& e = r.out.ledger.entries()[1];
  CHECK(e.outcome == VasOutcome::ClearingAccepted);
  CHECK(e.channel == DeliveryChannel::Clearing);
  const auto bal = reports::balance_check(r.store->snapshot_view(), std::nullopt, &r.out.ledger);
  REQUIRE(bal.orphans.size() == 1);
  CHECK(bal.orphans[0].transaction_no == e.transaction_no);
  CHECK(bal.ghosts.empty());
  CHECK(bal.delta == Idr{0});
  CHECK(bal.vas_delta == e.amount);
}

TEST_CASE("dropped requests and responses are retried and deduplicated") {
  auto c = small(6);
  c.faults.overrides[0] = FaultKind::DropRequest;
  c.faults.overrides[1] = FaultKind::DropResponse;
  c.faults.overrides[2] = FaultKind::Duplicate;
  c.faults.overrides[3] = FaultKind::WrongAmount;
  c.faults.overrides[4] = FaultKind::WrongAccount;
  Run r(c);
  CHECK(r.out.result.success == 4);
  CHECK(r.out.result.retries == 2);
  CHECK(r.out.result.duplicates == 1);
  CHECK(r.out.result.wrong_amount == 1);
  CHECK(r.out.result.wrong_account == 1);
  CHECK(r.store->snapshot_view().payment_trans.size() == 4);
  CHECK(r.out.result.max_latency_ms == 3000);
}

TEST_CASE("no message is sent more than three times") {
  auto c = small(50);
  c.faults.drop_request_rate = 0.5;
  c.faults.drop_response_rate = 0.5;
  Run r(c);
  std::map<std::string, int> sends;
  for (const auto& line : r.out.replay.lines()) {
    const auto cols = oracle::split(line, '\t');
    if (cols[2] == "VAS>UPS" && cols[3] != "DUPLICATE") ++sends[cols[4]];
  }
  for (const auto& [line, n] : sends) CHECK(n <= 3);
  CHECK(r.out.result.timeouts + r.out.result.reversed + r.out.result.cancelled + r.out.result.reversal_lost > 0);
  const auto bal = reports::balance_check(r.store->snapshot_view(), std::nullopt, &r.out.ledger);
  CHECK(bal.delta == Idr{0});
  CHECK(bal.orphans.size() == 0);
  // A reversal that never got through leaves a payment the bank gave back.
  std::size_t stranded = 0;
  const auto view = r.store->snapshot_view();
  for (const auto& e : r.out.ledger.entries()) {
    if (e.outcome != VasOutcome::ReversalLost) continue;
    for (const auto& p : view.payment_trans) {
      if (p.payment.transaction_no == e.transaction_no && !p.reversed) ++stranded;
    }
  }
  CHECK(bal.ghosts.size() == stranded);
}

TEST_CASE("same config and seed give identical results, replay and store") {
  auto c = small(80, {Paycode::Bill1, Paycode::Bill2});
  c.faults.drop_response_rate = 0.1;
  c.faults.drop_ack_rate = 0.05;
  c.faults.clearing_anomaly_rate = 0.05;
  c.faults.duplicate_rate = 0.1;
  Run a(c);
  Run b(c);
  CHECK(a.out.result == b.out.result);
  CHECK(a.out.replay.lines() == b.out.replay.lines());
  CHECK(a.out.ledger == b.out.ledger);
  CHECK(a.store->dump() == b.store->dump());

  TempDir da, db;
  write_outputs(a.out, da.path());
  write_outputs(b.out, db.path());
  for (const char* f : {"result.txt", "replay.log", "vas_ledger.tsv"}) {
    CHECK(ingest::read_text_file(da.path() / f) == ingest::read_text_file(db.path() / f));
  }

  c.seed = 43;
  Run other(c);
  CHECK(other.out.replay.lines() != a.out.replay.lines());
}

TEST_CASE("adding transactions never changes earlier fault draws") {
  auto c = small(60);
  c.faults.drop_response_rate = 0.3;
  c.attempts = 30;
  Run shorter(c);
  c.attempts = 60;
  Run longer(c);
  const auto& s = shorter.out.ledger.entries();
  const auto& l = longer.out.ledger.entries();
  REQUIRE(l.size() >= s.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == l[i]);
}

TEST_CASE("the replay oracle agrees with the store") {
  auto c = small(120, {Paycode::Bill1, Paycode::Bill2});
  c.faults.drop_request_rate = 0.05;
  c.faults.drop_response_rate = 0.1;
  c.faults.drop_ack_rate = 0.05;
  c.faults.duplicate_rate = 0.05;
  Run r(c);
  const auto totals = oracle::replay_totals(r.out.replay.lines());
  const auto bal = reports::balance_check(r.store->snapshot_view());
  CHECK(totals.standing_amount == bal.total_payments.value());
  CHECK(totals.standing == bal.payments);
  CHECK(totals.reversed == bal.reversals);
}

TEST_CASE("scenario files parse, print and reject nonsense") {
  const auto c = ScenarioConfig::parse(
      "# table replay\nname=t\nseed=9\nperiod=2010-2\nstudents=10\npaycodes=BILL-1, BILL-2\nattempts=7\n"
      "latency_ms=500\npopulation=existing\n[faults]\ndrop_ack_rate=0.25\n[overrides]\n3=drop_ack\n4=clearing_anomaly\n");
  CHECK(c.seed == 9);
  CHECK(c.period == kP2);
  CHECK(c.paycodes == std::vector<Paycode>{Paycode::Bill1, Paycode::Bill2});
  CHECK(c.attempts == 7u);
  CHECK(c.latency_ms == 500);
  CHECK_FALSE(c.generate_population);
  CHECK(c.faults.drop_ack_rate == 0.25);
  CHECK(c.faults.overrides.at(4) == FaultKind::ClearingAnomaly);
  const auto again = ScenarioConfig::parse(c.to_text());
  CHECK(again.to_text() == c.to_text());

  for (const char* bad : {"seed=x\n", "colour=red\n", "[faults]\ndrop_ack_rate=1.5\n", "[overrides]\n1=meteor\n",
                          "period=2010-S\npaycodes=BILL-1\n", "max_sends=4\n", "[other]\n"}) {
    try {
      ScenarioConfig::parse(bad);
      FAIL("accepted: " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  }
}

TEST_CASE("generating a population twice into one store is a ConfigError") {
  ManualClock clock;
  auto store = store::Store::in_memory();
  ups::Engine engine(*store, clock);
  run_scenario(small(3), engine, clock);
  try {
    run_scenario(small(3), engine, clock);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  auto existing = small(3, {Paycode::Bill2});
  existing.generate_population = false;
  existing.seed = 5;
  const auto out = run_scenario(existing, engine, clock);
  CHECK(out.result.success == 3);
}

TEST_CASE("short-semester scenarios pay BILL-SS") {
  auto c = small(20, {Paycode::BillSS});
  c.period = kPS;
  Run r(c);
  CHECK(r.out.result.success == 20);
}

TEST_CASE("the VAS ledger file round-trips") {
  auto c = small(10);
  c.faults.overrides[1] = FaultKind::ClearingAnomaly;
  Run r(c);
  CHECK(VasLedger::parse(r.out.ledger.to_text()) == r.out.ledger);
}

TEST_CASE("after a crash the in-flight payment is settled by reversal") {
  TempDir dir;
  auto c = small(10);
  std::vector<PaymentSlot> slots;
  ManualClock clock(c.start);
  std::uint64_t crash_at = 0;
  {
    auto store = store::Store::open(dir.path());
    ups::Engine engine(*store, clock);
    engine.start();
    slots = prepare_population(c, engine);
    crash_at = store->wal_sequence() + 4;
  }
  auto store = store::Store::open(dir.path(), store::StoreOptions{false, store::CrashPlan{crash_at, store::CrashPoint::AfterWrite}});
  auto engine = std::make_unique<ups::Engine>(*store, clock);
  engine->start();
  auto transport = std::make_unique<wire::InProcessTransport>(*engine);
  VirtualAccountSystem vas(c, clock, *transport);
  CHECK_THROWS_AS(vas.run(slots), store::SimulatedCrash);
  CHECK(vas.next_index() == 3);

  engine.reset();
  store = store::Store::open(dir.path());
  engine = std::make_unique<ups::Engine>(*store, clock);
  engine->start();
  transport = std::make_unique<wire::InProcessTransport>(*engine);
  vas.resume(*transport);
  vas.run(slots);
  CHECK(vas.result().attempted == 10);
  CHECK(vas.result().success == 9);
  CHECK(vas.result().reversed == 1);
  const auto bal = reports::balance_check(store->snapshot_view(), std::nullopt, &vas.ledger());
  CHECK(bal.balanced());
}
