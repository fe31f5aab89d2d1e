#include <thread>

#include "doctest.h"
#include "oracle/billing_oracle.hpp"
#include "support/fixtures.hpp"

using namespace tuition;
using namespace fixtures;

namespace {

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("requests are refused until the engine starts") {
  ManualClock clock(t0());
  auto store = store::Store::in_memory();
  ups::Engine engine(*store, clock);
  CHECK(engine.state() == ups::EngineState::Initializing);
  CHECK(error_of([&] { engine.handle_bill_request(bill_request("S001")); }) == ErrorCode::EngineNotReady);
  CHECK(error_of([&] { engine.handle_payment(payment("S001", Paycode::Bill1, 1, "T")); }) ==
        ErrorCode::EngineNotReady);
  CHECK(error_of([&] { engine.handle_reversal(payment("S001", Paycode::Bill1, 1, "T").as_reversal()); }) ==
        ErrorCode::EngineNotReady);
  engine.start();
  CHECK(engine.state() == ups::EngineState::Ready);
  CHECK(error_of([&] { engine.start(); }) == ErrorCode::InvalidTransition);
}

TEST_CASE("bill request projects the unpaid bills") {
  Harness h;
  h.engine.update_tariff(book(kP1));
  h.engine.ingest_academic_data({{student("S001")}, {}, {}});
  h.compute(Paycode::Bill1);
  const auto r = h.engine.handle_bill_request(bill_request("S001"));
  CHECK(r.response_code == "00");
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0] == protocol::BillItem{Paycode::Bill1, Idr{2'500'000}});

  const auto line = protocol::encode(r);
  for (int i = 0; i < 2; ++i) CHECK(protocol::encode(h.engine.handle_bill_request(bill_request("S001"))) == line);

  const auto unknown = h.engine.handle_bill_request(bill_request("S404"));
  CHECK(unknown.response_code == "01");
  CHECK(unknown.items.empty());
  CHECK(h.engine.handle_payment(payment("S404", Paycode::Bill1, 2'500'000, "T9")) == PaymentStatus::WrongAccount);
}

TEST_CASE("exact payment settles the bill, anything else is refused") {
  Harness h;
  h.engine.update_tariff(book(kP1));
  h.engine.ingest_academic_data({{student("S001")}, {}, {}});
  h.compute(Paycode::Bill1);
  const auto before = h.store->dump();
  CHECK(h.engine.handle_payment(payment("S001", Paycode::Bill1, 2'000'000, "T1")) == PaymentStatus::WrongAmount);
  CHECK(h.store->dump() == before);
  CHECK(h.engine.handle_payment(payment("S001", Paycode::Bill2, 2'500'000, "T2")) == PaymentStatus::WrongAmount);

  h.clock.advance_ms(1000);
  CHECK(h.engine.handle_payment(payment("S001", Paycode::Bill1, 2'500'000, "T3")) == PaymentStatus::Success);
  const auto bills = h.store->bills_of("S001");
  REQUIRE(bills.size() == 1);
  CHECK(bills[0].paid_status);
  CHECK(bills[0].datetime_paid == h.clock.now());
  CHECK(h.engine.handle_payment(payment("S001", Paycode::Bill1, 2'500'000, "T4")) == PaymentStatus::BillIsZero);
}

TEST_CASE("a retried payment books once and answers the same") {
  Harness h;
  seed_semester(h, 1);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  const auto p = payment("S001", Paycode::Bill1, amount, "T1");
  for (int k = 0; k < 3; ++k) CHECK(h.engine.handle_payment(p) == PaymentStatus::Success);
  CHECK(h.store->snapshot_view().payment_trans.size() == 1);

  const auto wrong = payment("S001", Paycode::Bill2, 1, "T2");
  CHECK(h.engine.handle_payment(wrong) == PaymentStatus::WrongAmount);
  CHECK(h.engine.handle_payment(wrong) == PaymentStatus::WrongAmount);
}

TEST_CASE("reversal restores the bill and is itself idempotent") {
  Harness h;
  seed_semester(h, 1);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  const auto p = payment("S001", Paycode::Bill1, amount, "T1");
  CHECK(h.engine.handle_reversal(p.as_reversal()) == ReversalStatus::Fail);
  REQUIRE(h.engine.handle_payment(p) == PaymentStatus::Success);

  auto partial = p.as_reversal();
  partial.amount = Idr{amount - 1};
  CHECK(h.engine.handle_reversal(partial) == ReversalStatus::Fail);
  auto other_bank = p.as_reversal();
  other_bank.bank_code = "008";
  CHECK(h.engine.handle_reversal(other_bank) == ReversalStatus::Fail);

  CHECK(h.engine.handle_reversal(p.as_reversal()) == ReversalStatus::Success);
  CHECK(h.amount_of("S001", Paycode::Bill1) == Idr{amount});
  const auto after = h.store->dump();
  CHECK(h.engine.handle_reversal(p.as_reversal()) == ReversalStatus::Fail);
  CHECK(h.store->dump() == after);
}

TEST_CASE("computing BILL-1 for everyone matches the per-student arithmetic") {
  Harness h;
  h.engine.update_tariff(book(kP1));
  store::AcademicBatch batch;
  for (int i = 0; i < 1000; ++i) {
    batch.students.push_back(student("ID" + std::to_string(i), kP1, i % 3 == 0 ? DegreeLevel::S2 : DegreeLevel::S1,
                                     i % 7 != 0));
  }
  h.engine.ingest_academic_data(batch);
  const auto summary = h.engine.run_bill_computation({{{std::nullopt, Paycode::Bill1, kP1}}, std::nullopt});
  CHECK(summary.generated() == 1000);
  CHECK(h.store->snapshot_view().bill_count() == 1000);
  const auto b = book(kP1);
  for (const auto& s : batch.students) {
    CHECK(h.amount_of(s.student_id, Paycode::Bill1).value() == oracle::expected_bills(s, {}, {}, b).bill1);
  }
  CHECK(h.engine.state() == ups::EngineState::Ready);
}

TEST_CASE("recomputing after a new course grows BILL-2 by its credits") {
  Harness h;
  seed_semester(h, 1);
  const auto before = h.amount_of("S001", Paycode::Bill2);
  h.engine.ingest_academic_data({{}, {reg("S001", "CS300", 3)}, {}});
  CHECK(h.amount_of("S001", Paycode::Bill2) == before);
  const auto summary = h.engine.run_bill_computation({{{"S001", Paycode::Bill2, kP1}}, std::nullopt});
  CHECK(summary.replaced == 1);
  CHECK(h.amount_of("S001", Paycode::Bill2) == before + Idr{3 * 150'000});
  CHECK(h.store->get_unpaid_bills("S001").size() == 2);
}

TEST_CASE("paid bills are left alone by recomputation") {
  Harness h;
  seed_semester(h, 1);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  REQUIRE(h.engine.handle_payment(payment("S001", Paycode::Bill1, amount, "T1")) == PaymentStatus::Success);
  h.engine.update_tariff(book(kP1, 2'000'000));
  const auto s = h.engine.run_bill_computation({{{"S001", Paycode::Bill1, kP1}}, std::nullopt});
  CHECK(s.skipped_paid == 1);
  CHECK(s.generated() == 0);
  const auto bills = h.store->bills_of("S001");
  int bill1_rows = 0;
  for (const auto& b : bills) bill1_rows += b.paycode == Paycode::Bill1;
  CHECK(bill1_rows == 1);
}

TEST_CASE("an unchanged recompute writes nothing") {
  Harness h;
  seed_semester(h, 3);
  const auto seq = h.store->wal_sequence();
  const auto s = h.engine.run_bill_computation({{{std::nullopt, Paycode::Bill1, kP1}}, std::nullopt});
  CHECK(s.unchanged == 3);
  CHECK(h.store->wal_sequence() == seq);
}

TEST_CASE("reloaded tariffs flow into recomputed bills") {
  Harness h;
  seed_semester(h, 2);
  h.engine.update_tariff(book(kP1, 1'100'000, 160'000));
  h.compute(Paycode::Bill1);
  h.compute(Paycode::Bill2);
  const auto b = book(kP1, 1'100'000, 160'000);
  for (const auto* id : {"S001", "S002"}) {
    const auto e = oracle::expected_bills(*h.store->enrollment(kP1, id), h.store->registrations_of(kP1, id), {}, b);
    CHECK(h.amount_of(id, Paycode::Bill1).value() == e.bill1);
    CHECK(h.amount_of(id, Paycode::Bill2).value() == e.bill2);
  }
}

TEST_CASE("computation needs academic data and tariffs") {
  Harness h;
  CHECK(error_of([&] { h.compute(Paycode::Bill1); }) == ErrorCode::MissingTariff);
  h.engine.update_tariff(book(kP1));
  CHECK(error_of([&] { h.compute(Paycode::Bill1, kP1, "S001"); }) == ErrorCode::MissingAcademicData);
  CHECK(error_of([&] { h.compute(Paycode::Fine1); }) == ErrorCode::InvalidArgument);
  CHECK(h.engine.state() == ups::EngineState::Ready);
}

TEST_CASE("a large scholarship leaves BILL-2 at zero and settled") {
  Harness h;
  h.engine.update_tariff(book(kP1));
  h.engine.ingest_academic_data(
      {{student("S001")}, {reg("S001", "IF102", 3)}, {{kP1, "S001", "n", "FULL", Idr{9'000'000}}}});
  h.compute(Paycode::Bill1);
  h.compute(Paycode::Bill2);
  const auto bills = h.store->bills_of("S001");
  bool saw = false;
  for (const auto& b : bills) {
    if (b.paycode != Paycode::Bill2) continue;
    saw = true;
    CHECK(b.amount == Idr{0});
    CHECK(b.paid_status);
  }
  CHECK(saw);
  CHECK(h.engine.check_eligibility("S001", kP1, ledger::Action::ViewGrades).blocking == Paycode::Bill1);
}

TEST_CASE("ingestion is an idempotent upsert with per-record diagnostics") {
  Harness h;
  const store::AcademicBatch batch{{student("A"), student("B"), student("C")}, {}, {}};
  CHECK(h.engine.ingest_academic_data(batch).inserted == 3);
  CHECK(h.store->students_in(kP1).size() == 3);
  CHECK(h.engine.ingest_academic_data(batch).changes() == 0);
  CHECK(error_of([&] { h.engine.ingest_academic_data({{}, {reg("Z", "IF101", 2)}, {}}); }) ==
        ErrorCode::ValidationError);
}

TEST_CASE("tariff books validate and replace whole") {
  Harness h;
  CHECK(h.engine.update_tariff(book(kP1)));
  CHECK_FALSE(h.engine.update_tariff(book(kP1)));
  CHECK(h.store->tariff_book(kP1)->general.size() == 9);
  auto bad = book(kP1);
  bad.general[TariffId::CreditS1].amount = Idr{-1};
  CHECK(error_of([&] { h.engine.update_tariff(bad); }) == ErrorCode::ValidationError);
  CHECK(*h.store->tariff_book(kP1) == book(kP1));
}

TEST_CASE("fines are assessed once and DUE-BILL rolls the previous period") {
  Harness h;
  seed_semester(h, 1);
  const auto b2 = h.amount_of("S001", Paycode::Bill2);
  const auto amount1 = h.amount_of("S001", Paycode::Bill1).value();
  REQUIRE(h.engine.handle_payment(payment("S001", Paycode::Bill1, amount1, "T1")) == PaymentStatus::Success);
  h.clock.advance_ms(ups::Engine::kDefaultDueMs + 1000);
  const auto fines = h.engine.assess_fines(kP1, ledger::FinePolicy{});
  CHECK(fines.fines == 1);
  CHECK(fines.total == Idr{100'000});
  CHECK(h.engine.assess_fines(kP1, ledger::FinePolicy{}).fines == 0);
  CHECK(h.amount_of("S001", Paycode::Fine2) == Idr{100'000});

  h.engine.update_tariff(book(kP2));
  h.engine.ingest_academic_data({{student("S001", kP2)}, {}, {}});
  h.compute(Paycode::DueBill, kP2);
  CHECK(h.amount_of("S001", Paycode::DueBill, kP2) == b2 + Idr{100'000});
  CHECK(h.store->get_unpaid_bills("S001", kP1).empty());
  CHECK_FALSE(h.engine.check_eligibility("S001", kP2, ledger::Action::CourseRegistration).allowed);
}

TEST_CASE("transactions keep flowing while a report snapshot is open") {
  Harness h;
  seed_semester(h, 2);
  const auto amount = h.amount_of("S002", Paycode::Bill1).value();
  h.engine.with_report_snapshot([&](const store::TableSet&) {
    CHECK(h.engine.state() == ups::EngineState::GeneratingReports);
    CHECK(h.engine.handle_payment(payment("S002", Paycode::Bill1, amount, "T1")) == PaymentStatus::Success);
    return 0;
  });
  CHECK(h.engine.state() == ups::EngineState::Ready);
  CHECK(error_of([&] {
          h.engine.with_report_snapshot([&](const store::TableSet&) {
            h.compute(Paycode::Bill1);
            return 0;
          });
        }) == ErrorCode::InvalidTransition);
}

TEST_CASE("payments for different students commit in parallel") {
  Harness h;
  seed_semester(h, 64);
  std::vector<std::thread> pool;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t * 8 + 1; i <= t * 8 + 8; ++i) {
        const std::string id = sid(i);
        for (const auto code : {Paycode::Bill1, Paycode::Bill2}) {
          const auto amount = h.amount_of(id, code).value();
          const auto tx = std::string(id) + std::string(to_string(code));
          for (int k = 0; k < 2; ++k) {
            if (h.engine.handle_payment(payment(id, code, amount, tx)) == PaymentStatus::Success && k == 0) ++ok;
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  CHECK(ok.load() == 128);
  const auto view = h.store->snapshot_view();
  CHECK(view.payment_trans.size() == 128);
  for (const auto& [id, account] : view.std_bill) {
    for (const auto& b : account.bills) CHECK(b.paid_status);
  }
}
