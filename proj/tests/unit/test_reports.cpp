#include "doctest.h"
#include "support/fixtures.hpp"
#include "tuition/reports.hpp"

using namespace tuition;
using namespace tuition::reports;
using namespace fixtures;

TEST_CASE("empty store gives header-only reports and a zero balance") {
  const store::TableSet empty;
  CHECK(bill_report(empty).rows.empty());
  CHECK(transaction_report(empty).rows.empty());
  CHECK(payment_report(empty).rows.empty());
  CHECK(bill_report(empty).to_text() ==
        "year,semester,student_ID,name,paycode,amount,generate_datetime,paid_status,datetime_paid\n");
  CHECK(transaction_report(empty).to_text() == "transaction_type,student_ID,paycode,amount,CCY_code\n");
  CHECK(payment_report(empty).to_text() == "student_ID,name,paycode,amount,trans_datetime\n");
  const auto bal = balance_check(empty);
  CHECK(bal.delta == Idr{0});
  CHECK(bal.summary().find("delta=0\n") != std::string::npos);
}

TEST_CASE("bill report rows reflect paid status") {
  Harness h;
  seed_semester(h, 3);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  h.clock.advance_ms(60'000);
  REQUIRE(h.engine.handle_payment(payment("S001", Paycode::Bill1, amount, "T1")) == PaymentStatus::Success);
  Filter one;
  one.student_id = "S001";
  const auto t = bill_report(h.store->snapshot_view(), one);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"2010", "1", "S001", "Name S001", "BILL-1", std::to_string(amount),
                                             "20100215093000", "YES", "20100215093100"});
  CHECK(t.rows[1][4] == "BILL-2");
  CHECK(t.rows[1][7] == "NO");
  CHECK(t.rows[1][8] == "");
  CHECK(bill_report(h.store->snapshot_view()).rows.size() == h.store->snapshot_view().bill_count());
}

TEST_CASE("superseded generations show only on request") {
  Harness h;
  seed_semester(h, 1);
  h.engine.update_tariff(book(kP1, 1'300'000));
  h.compute(Paycode::Bill1);
  const auto view = h.store->snapshot_view();
  CHECK(bill_report(view).rows.size() == 2);
  const auto all = bill_report(view, {}, true);
  CHECK(all.rows.size() == 3);
  CHECK(all.header.back() == "superseded");
}

TEST_CASE("a payment and its reversal: two transaction rows, no payment rows") {
  Harness h;
  seed_semester(h, 1);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  const auto p = payment("S001", Paycode::Bill1, amount, "T1");
  REQUIRE(h.engine.handle_payment(p) == PaymentStatus::Success);
  h.clock.advance_ms(1000);
  REQUIRE(h.engine.handle_reversal(p.as_reversal()) == ReversalStatus::Success);
  const auto view = h.store->snapshot_view();
  const auto tx = transaction_report(view);
  REQUIRE(tx.rows.size() == 2);
  CHECK(tx.rows[0][0] == "PAYMENT");
  CHECK(tx.rows[1][0] == "REVERSAL");
  CHECK(tx.rows[1][4] == "IDR");
  CHECK(payment_report(view).rows.empty());
  const auto bal = balance_check(view);
  CHECK(bal.delta == Idr{0});
  CHECK(bal.reversals == 1);
}

TEST_CASE("payment report sums to the balance total") {
  Harness h;
  seed_semester(h, 20);
  for (int i = 1; i <= 20; i += 2) {
    const std::string id = sid(i);
    const auto amount = h.amount_of(id, Paycode::Bill2).value();
    REQUIRE(h.engine.handle_payment(payment(id, Paycode::Bill2, amount, std::string("T") + id)) ==
            PaymentStatus::Success);
  }
  const auto view = h.store->snapshot_view();
  std::int64_t sum = 0;
  for (const auto& row : payment_report(view).rows) sum += std::stoll(row[3]);
  const auto bal = balance_check(view, kP1);
  CHECK(sum == bal.total_payments.value());
  CHECK(bal.total_billed_paid == bal.total_payments);
  CHECK(bal.payments == 10);
}

TEST_CASE("reports taken mid-run are consistent and later ones include every commit") {
  Harness h;
  seed_semester(h, 4);
  const auto first = payment_report(h.store->snapshot_view());
  const auto amount = h.amount_of("S004", Paycode::Bill1).value();
  REQUIRE(h.engine.handle_payment(payment("S004", Paycode::Bill1, amount, "T1")) == PaymentStatus::Success);
  const auto second = payment_report(h.store->snapshot_view());
  CHECK(first.rows.empty());
  CHECK(second.rows.size() == 1);
}

TEST_CASE("delimiter is configurable and fields are quoted when needed") {
  Table t;
  t.header = {"a", "b"};
  t.rows = {{"x;y", "say \"hi\""}, {"1", "2"}};
  CHECK(t.to_text(';') == "a;b\n\"x;y\";\"say \"\"hi\"\"\"\n1;2\n");
  CHECK(t.to_text('\t') == "a\tb\nx;y\t\"say \"\"hi\"\"\"\n1\t2\n");
}
