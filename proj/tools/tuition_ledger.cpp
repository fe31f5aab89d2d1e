#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "tuition/engine.hpp"
#include "tuition/ingest.hpp"
#include "tuition/reports.hpp"
#include "tuition/server.hpp"
#include "tuition/store.hpp"
#include "tuition/vas_sim.hpp"

namespace fs = std::filesystem;
using namespace tuition;

namespace {

class SystemClock final : public Clock {
 public:
  Timestamp now() const override {
    const auto since = std::chrono::system_clock::now().time_since_epoch();
    return Timestamp{std::chrono::duration_cast<std::chrono::seconds>(since).count() * 1000};
  }
};

struct Globals {
  std::string data_dir;
  std::string now;
  bool fsync = true;
};

struct Session {
  std::unique_ptr<Clock> clock;
  std::unique_ptr<store::Store> store;
  std::unique_ptr<ups::Engine> engine;
};

Timestamp parse_time_flag(const std::string& text, const char* flag) {
  const auto t = parse_datetime(text);
  if (!t) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " must be YYYYMMDDHHMMSS");
  return *t;
}

AcademicPeriod parse_period_flag(const std::string& text) {
  const auto p = parse_period(text);
  if (!p || !p->valid()) throw Error(ErrorCode::InvalidArgument, "--period must look like 2010-1, 2010-2 or 2010-S");
  return *p;
}

char parse_delimiter(const std::string& text) {
  if (text == "\\t" || text == "tab") return '\t';
  if (text.size() != 1) throw Error(ErrorCode::InvalidArgument, "--delimiter must be one character");
  return text[0];
}

Session open_session(const Globals& g, std::unique_ptr<Clock> clock = nullptr) {
  Session s;
  if (clock) {
    s.clock = std::move(clock);
  } else if (!g.now.empty()) {
    s.clock = std::make_unique<ManualClock>(parse_time_flag(g.now, "--now"));
  } else {
    s.clock = std::make_unique<SystemClock>();
  }
  store::StoreOptions options;
  options.fsync = g.fsync;
  s.store = store::Store::open(g.data_dir, options);
  s.engine = std::make_unique<ups::Engine>(*s.store, *s.clock);
  s.engine->start();
  return s;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error(ErrorCode::IoError, "cannot write " + out_path);
}

int serve(ups::Engine& engine, const std::string& socket_path) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  wire::SocketServer server(engine, socket_path);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  std::cout << "serving on " << socket_path << std::endl;
  server.serve();
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuition billing and payment ledger"};
  app.require_subcommand(1);
  Globals g;
  const char* env_dir = std::getenv("TUITION_LEDGER_DATA");
  g.data_dir = env_dir && *env_dir ? env_dir : "ledger-data";
  app.add_option("--data-dir", g.data_dir, "Store directory (env TUITION_LEDGER_DATA)");
  app.add_option("--now", g.now, "Fix the clock, YYYYMMDDHHMMSS");
  app.add_flag("!--no-fsync", g.fsync, "Skip fsync on log appends");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load students, registrations and scholarships");
  std::string students_file, registrations_file, scholarships_file, delimiter = ",";
  ingest->add_option("--students", students_file, "Student file");
  ingest->add_option("--registrations", registrations_file, "Course registration file");
  ingest->add_option("--scholarships", scholarships_file, "Scholarship file");
  ingest->add_option("--delimiter", delimiter, "Field delimiter");

  // tariff load
  auto* tariff = app.add_subcommand("tariff", "Tariff maintenance");
  tariff->require_subcommand(1);
  auto* tariff_load = tariff->add_subcommand("load", "Replace tariff books from files");
  std::string general_file, course_file;
  tariff_load->add_option("--general", general_file, "General tariff file")->required();
  tariff_load->add_option("--course", course_file, "Course tariff file");
  tariff_load->add_option("--delimiter", delimiter, "Field delimiter");

  // bills
  auto* bills = app.add_subcommand("bills", "Bill computation");
  bills->require_subcommand(1);
  auto* compute = bills->add_subcommand("compute", "Compute bills");
  std::string period_text, paycode_text, student = "ALL", due_text;
  compute->add_option("--period", period_text, "Academic period")->required();
  compute->add_option("--paycode", paycode_text, "BILL-1, BILL-2, BILL-SS or DUE-BILL")->required();
  compute->add_option("--student", student, "ALL or a student_ID");
  compute->add_option("--due", due_text, "Due date, YYYYMMDDHHMMSS");
  auto* fines = bills->add_subcommand("fines", "Charge fines on overdue bills");
  fines->add_option("--period", period_text, "Academic period")->required();
  std::int64_t flat = 100'000;
  std::optional<std::int64_t> percent_bp;
  fines->add_option("--flat", flat, "Flat fine in IDR");
  fines->add_option("--percent-bp", percent_bp, "Fine as basis points of the bill");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Expose the engine on a Unix socket");
  std::string socket_path;
  serve_cmd->add_option("--socket", socket_path, "Socket path")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a simulated bank scenario");
  std::string config_file, out_dir;
  std::optional<std::uint64_t> seed;
  simulate->add_option("--config", config_file, "Scenario file")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");
  simulate->add_option("--out", out_dir, "Directory for result, replay log and VAS ledger")->required();

  // report
  auto* report = app.add_subcommand("report", "Emit a report");
  std::string kind, out_file, vas_file;
  bool all_generations = false;
  report->add_option("kind", kind, "bills, payments, transactions or balance")
      ->required()
      ->check(CLI::IsMember({"bills", "payments", "transactions", "balance"}));
  report->add_option("--student", student, "ALL or a student_ID");
  report->add_option("--period", period_text, "Academic period");
  report->add_option("--delimiter", delimiter, "Field delimiter");
  report->add_option("--out", out_file, "Write to a file instead of stdout");
  report->add_option("--vas-ledger", vas_file, "Bank-side ledger to reconcile against");
  report->add_flag("--all-generations", all_generations, "Include superseded bills");

  // eligibility
  auto* elig = app.add_subcommand("eligibility", "Ask whether a student may proceed");
  std::string action_text;
  elig->add_option("--student", student, "student_ID")->required();
  elig->add_option("--period", period_text, "Academic period")->required();
  elig->add_option("--action", action_text, "COURSE_REGISTRATION, MIDTERM_EXAM or VIEW_GRADES")->required();

  auto* snapshot = app.add_subcommand("snapshot", "Write a snapshot and truncate the log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) {
      const char delim = parse_delimiter(delimiter);
      store::AcademicBatch batch;
      if (!students_file.empty()) {
        batch.students = ingest::parse_students(ingest::read_text_file(students_file), students_file, delim);
      }
      if (!registrations_file.empty()) {
        batch.registrations =
            ingest::parse_registrations(ingest::read_text_file(registrations_file), registrations_file, delim);
      }
      if (!scholarships_file.empty()) {
        batch.scholarships =
            ingest::parse_scholarships(ingest::read_text_file(scholarships_file), scholarships_file, delim);
      }
      if (batch.empty()) throw Error(ErrorCode::EmptyInput, "nothing to ingest");
      auto s = open_session(g);
      const auto summary = s.engine->ingest_academic_data(batch);
      std::cout << summary.inserted << " inserted, " << summary.updated << " updated, " << summary.unchanged
                << " unchanged\n";
    } else if (*tariff_load) {
      const char delim = parse_delimiter(delimiter);
      const auto books = ingest::parse_tariffs(ingest::read_text_file(general_file),
                                               course_file.empty() ? "" : ingest::read_text_file(course_file), delim);
      auto s = open_session(g);
      for (const auto& book : books) {
        const bool changed = s.engine->update_tariff(book);
        std::cout << to_string(book.period) << (changed ? " updated" : " unchanged") << "\n";
      }
    } else if (*compute) {
      const auto period = parse_period_flag(period_text);
      const auto paycode = parse_paycode(paycode_text);
      if (!paycode) throw Error(ErrorCode::InvalidArgument, "unknown paycode " + paycode_text);
      ups::BillComputeCommand cmd;
      cmd.entries.push_back({student == "ALL" ? std::nullopt : std::optional<std::string>(student), *paycode, period});
      if (!due_text.empty()) cmd.due_date = parse_time_flag(due_text, "--due");
      auto s = open_session(g);
      const auto summary = s.engine->run_bill_computation(cmd);
      std::cout << summary.generated() << " bills generated";
      if (summary.unchanged || summary.skipped_paid) {
        std::cout << " (" << summary.unchanged << " unchanged, " << summary.skipped_paid << " already paid)";
      }
      std::cout << "\n";
    } else if (*fines) {
      const auto period = parse_period_flag(period_text);
      const auto policy = percent_bp ? ledger::FinePolicy::percent(*percent_bp) : ledger::FinePolicy::flat(Idr{flat});
      auto s = open_session(g);
      const auto summary = s.engine->assess_fines(period, policy);
      std::cout << summary.fines << " fines charged, total " << summary.total.to_string() << "\n";
    } else if (*serve_cmd) {
      auto s = open_session(g);
      return serve(*s.engine, socket_path);
    } else if (*simulate) {
      auto config = sim::ScenarioConfig::load(config_file);
      if (seed) config.seed = *seed;
      auto clock = std::make_unique<ManualClock>(config.start);
      auto* manual = clock.get();
      auto s = open_session(g, std::move(clock));
      const auto run = sim::run_scenario(config, *s.engine, *manual);
      sim::write_outputs(run, out_dir);
      std::cout << run.result.to_text();
    } else if (*report) {
      const char delim = parse_delimiter(delimiter);
      reports::Filter filter;
      if (student != "ALL") filter.student_id = student;
      if (!period_text.empty()) filter.period = parse_period_flag(period_text);
      std::optional<sim::VasLedger> vas;
      if (!vas_file.empty()) vas = sim::VasLedger::load(vas_file);
      auto s = open_session(g);
      const std::string text = s.engine->with_report_snapshot([&](const store::TableSet& t) {
        if (kind == "bills") return reports::bill_report(t, filter, all_generations).to_text(delim);
        if (kind == "payments") return reports::payment_report(t, filter).to_text(delim);
        if (kind == "transactions") return reports::transaction_report(t, filter).to_text(delim);
        return reports::balance_check(t, filter.period, vas ? &*vas : nullptr).summary();
      });
      emit(text, out_file);
    } else if (*elig) {
      const auto period = parse_period_flag(period_text);
      const auto action = ledger::parse_action(action_text);
      if (!action) throw Error(ErrorCode::InvalidArgument, "unknown action " + action_text);
      auto s = open_session(g);
      std::cout << s.engine->check_eligibility(student, period, *action).to_string() << "\n";
    } else if (*snapshot) {
      auto s = open_session(g);
      s.store->checkpoint();
      std::cout << "snapshot written at sequence " << s.store->wal_sequence() << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: validation failed\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
