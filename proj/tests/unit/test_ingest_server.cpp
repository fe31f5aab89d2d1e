#include <thread>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"
#include "tuition/ingest.hpp"
#include "tuition/server.hpp"
#include "tuition/vas_sim.hpp"

using namespace tuition;
using namespace fixtures;

TEST_CASE("student file columns follow the dictionary") {
  const auto s = ingest::parse_students(
      "year,semester,student_ID,pay_credits,bill1_credits,name,degree_level,dispensation\n"
      "2010,1,2016730001,YES,,Ani Wijaya,S1,NO\n"
      "2010,2,2016730002,NO,8,Budi,S2,YES\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].period == kP1);
  CHECK(s[0].bill1_credits == 10);
  CHECK(s[0].pay_credits);
  CHECK(s[1].period == kP2);
  CHECK(s[1].bill1_credits == 8);
  CHECK(s[1].degree_level == DegreeLevel::S2);
  CHECK(s[1].dispensation);
}

TEST_CASE("malformed rows produce row-numbered diagnostics") {
  try {
    ingest::parse_students(
        "year,semester,student_ID,pay_credits,bill1_credits,name,degree_level,dispensation\n"
        "2010,1,A,YES,,Ani,S1,NO\n"
        "2010,4,B,MAYBE,,Budi,S9,NO\n"
        "2010,1,C\n",
        "students.csv");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const auto& d = e.diagnostics();
    REQUIRE(d.size() == 4);
    CHECK(d[0].rfind("students.csv line 3:", 0) == 0);
    CHECK(d[3].rfind("students.csv line 4:", 0) == 0);
  }
  CHECK_THROWS_AS(ingest::parse_students("student_ID,year\n"), ValidationError);
  CHECK_THROWS_AS(ingest::parse_students(""), ValidationError);
}

TEST_CASE("registrations, scholarships and tariffs parse") {
  const auto r = ingest::parse_registrations(
      "year,semester,student_ID,name,course_code,credits,status_lab,status_studio,status_asist,status_tutor,"
      "trans_datetime\n2010,1,A,Ani,IF101,3,YES,NO,YES,NO,20100201080000\n");
  REQUIRE(r.size() == 1);
  CHECK(r[0].status_lab);
  CHECK(r[0].status_assist);
  CHECK(r[0].trans_datetime == make_timestamp(2010, 2, 1, 8, 0, 0));

  const auto s = ingest::parse_scholarships(
      "year,semester,student_ID,name,scholarship_code,amount\n2010,1,A,Ani,MERIT,500000\n", "x", ',');
  REQUIRE(s.size() == 1);
  CHECK(s[0].amount == Idr{500'000});

  const auto books = ingest::parse_tariffs(
      "year,semester,tariff_ID,tariff_description,amount\n2010,1,REGISTRATION_S1,Reg,1000000\n"
      "2010,1,CREDIT_S1,Credit,150000\n2010,S,REGISTRATION_S1,Reg,500000\n",
      "year,semester,course_code,code_lab,amount_lab,code_studio,amount_studio,code_assist,amount_assist,"
      "code_tutor,amount_tutor\n2010,1,IF101,LAB-IF101,200000,,,,,,\n");
  REQUIRE(books.size() == 2);
  CHECK(books[0].general_amount(TariffId::CreditS1) == Idr{150'000});
  CHECK(books[0].course.at("IF101").lab->amount == Idr{200'000});
  CHECK_FALSE(books[0].course.at("IF101").studio);
  CHECK(books[1].period == kPS);

  CHECK_THROWS_AS(ingest::parse_tariffs("year,semester,tariff_ID,tariff_description,amount\n"
                                        "2010,1,PARKING_S1,Park,1\n",
                                        ""),
                  ValidationError);
}

TEST_CASE("dispatcher answers each request kind and reports codec errors") {
  Harness h;
  seed_semester(h, 1);
  const auto amount = h.amount_of("S001", Paycode::Bill1).value();
  CHECK(wire::dispatch_line(h.engine, protocol::encode(bill_request("S001"))).rfind("BILLRESP|00|360|S001|", 0) == 0);
  const auto p = payment("S001", Paycode::Bill1, amount, "T1");
  CHECK(wire::dispatch_line(h.engine, protocol::encode(p)) == "PAYSTATUS|SUCCESS");
  CHECK(wire::dispatch_line(h.engine, protocol::encode(p.as_reversal())) == "REVSTATUS|SUCCESS");
  CHECK(wire::dispatch_line(h.engine, "PAYSTATUS|SUCCESS") == "ERROR|UnknownKind");
  CHECK(wire::dispatch_line(h.engine, "garbage") == "ERROR|UnknownKind");
  CHECK(wire::dispatch_line(h.engine, "BILLREQ|x") == "ERROR|MalformedLine");
}

TEST_CASE("a scenario runs against the engine over a Unix socket") {
  TempDir dir;
  sim::ScenarioConfig c;
  c.students = 30;
  c.scholarship_rate = 0;
  c.paycodes = {Paycode::Bill1, Paycode::Bill2};
  c.faults.overrides[4] = sim::FaultKind::DropAck;
  c.faults.overrides[7] = sim::FaultKind::Duplicate;

  ManualClock clock(c.start);
  auto store = store::Store::in_memory();
  ups::Engine engine(*store, clock);
  engine.start();
  const auto slots = sim::prepare_population(c, engine);

  const auto sock = dir.path() / "ups.sock";
  wire::SocketServer server(engine, sock);
  std::thread serving([&] { server.serve(); });
  {
    wire::SocketTransport transport(sock);
    sim::VirtualAccountSystem vas(c, clock, transport);
    vas.run(slots);
    CHECK(vas.result().attempted == 60);
    CHECK(vas.result().success == 59);
    CHECK(vas.result().reversed == 1);
    CHECK(vas.result().duplicates == 1);
  }
  server.stop();
  serving.join();
  CHECK(store->snapshot_view().payment_trans.size() == 60);
}
