#include "previs/service.hpp"

#include "previs/error.hpp"
#include "previs/image_io.hpp"

#include <httplib.h>

#include <algorithm>

namespace previs {

int http_status(ErrorCode code)
{
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::DuplicateId:
    case ErrorCode::VersionMismatch: return 409;
    case ErrorCode::NumericalFailure:
    case ErrorCode::Io: return 500;
    default: return 422;
  }
}

nlohmann::json error_json(const std::exception& e)
{
  nlohmann::json err = {{"message", e.what()}};
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    err["code"] = std::string(to_string(pe->code()));
    if (const auto* se = dynamic_cast<const ScriptError*>(&e)) {
      err["offset"] = se->offset();
      if (!se->field().empty()) err["field"] = se->field();
      if (!se->token().empty()) err["token"] = se->token();
    }
  } else if (dynamic_cast<const nlohmann::json::exception*>(&e)) {
    err["code"] = "Schema";
  } else {
    err["code"] = "Internal";
  }
  return {{"error", err}};
}

std::string_view to_string(JobStatus s)
{
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "unknown";
}

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const Frame& f)
{
  const auto png = encode_png(f);
  res.set_content(std::string(png.begin(), png.end()), "image/png");
}

nlohmann::json parse_body(const httplib::Request& req)
{
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("request body is not JSON: ") + e.what());
  }
}

Placement placement_from_request(const nlohmann::json& j)
{
  Placement p;
  p.character_id = j.at("character_id").get<std::string>();
  const auto& pos = j.at("position");
  p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.size() > 2 ? pos.at(2).get<double>() : 0.0};
  p.facing_rad = j.value("facing_rad", 0.0);
  return p;
}

int int_param(const httplib::Request& req, const char* key, int fallback)
{
  if (!req.has_param(key)) return fallback;
  try {
    return std::stoi(req.get_param_value(key));
  } catch (const std::exception&) {
    throw Error(ErrorCode::Validation, std::string("query parameter '") + key + "' must be an integer");
  }
}

nlohmann::json run_summary(const ProposalRun& run, int line)
{
  return {{"line", line},
          {"run", run.run},
          {"ranker", run.ranker},
          {"proposal_count", run.proposals.size()},
          {"raw_count", run.raw_count},
          {"story_count", run.story_count},
          {"warnings", run.warnings}};
}

nlohmann::json job_json(const Job& j)
{
  nlohmann::json out = {{"id", j.id}, {"project", j.project}, {"line", j.line}, {"status", to_string(j.status)}};
  if (j.status == JobStatus::Done) out["result"] = j.result;
  if (j.status == JobStatus::Failed) out["error"] = j.error["error"];
  return out;
}

std::string project_of(const std::string& proposal_id)
{
  const auto parts = parse_proposal_id(proposal_id);
  if (!parts) throw Error(ErrorCode::NotFound, "malformed proposal id '" + proposal_id + "'");
  return parts->project;
}

}  // namespace

StudioService::StudioService(Studio& studio) : studio_(studio), server_(std::make_unique<httplib::Server>())
{
  routes();
  worker_ = std::thread([this] { worker_loop(); });
}

StudioService::~StudioService()
{
  stop();
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

int StudioService::bind(const std::string& host, int port)
{
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool StudioService::listen_after_bind() { return server_->listen_after_bind(); }

void StudioService::stop() { server_->stop(); }

std::shared_ptr<std::shared_mutex> StudioService::project_lock(const std::string& id)
{
  std::lock_guard lock(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::shared_mutex>();
  return m;
}

std::string StudioService::submit_generate(const std::string& project, int line)
{
  std::lock_guard lock(jobs_mutex_);
  Job j;
  j.id = "job-" + std::to_string(next_job_++);
  j.project = project;
  j.line = line;
  const std::string id = j.id;
  jobs_.emplace(id, std::move(j));
  queue_.push_back(id);
  jobs_cv_.notify_one();
  return id;
}

std::optional<Job> StudioService::job(const std::string& id) const
{
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void StudioService::worker_loop()
{
  for (;;) {
    std::string id;
    Job snapshot;
    {
      std::unique_lock lock(jobs_mutex_);
      jobs_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      jobs_[id].status = JobStatus::Running;
      snapshot = jobs_[id];
    }
    nlohmann::json result, error;
    try {
      auto mtx = project_lock(snapshot.project);
      std::unique_lock write(*mtx);
      Project p = studio_.store().load(snapshot.project);
      const ProposalRun& run = studio_.generate_line(p, snapshot.line);
      result = run_summary(run, snapshot.line);
      studio_.store().save(p);
    } catch (const std::exception& e) {
      error = error_json(e);
    }
    std::lock_guard lock(jobs_mutex_);
    Job& j = jobs_[id];
    if (error.is_null()) {
      j.status = JobStatus::Done;
      j.result = std::move(result);
    } else {
      j.status = JobStatus::Failed;
      j.error = std::move(error);
    }
  }
}

void StudioService::routes()
{
  using httplib::Request;
  using httplib::Response;
  auto& s = *server_;

  s.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_json(res, error_json(e), http_status(e.code()));
    } catch (const nlohmann::json::exception& e) {
      send_json(res, error_json(e), 422);
    } catch (const std::exception& e) {
      send_json(res, error_json(e), 500);
    }
  });
  s.set_post_routing_handler([](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
  });
  s.Options(R"(/api/.*)", [](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Get("/api/scenes", [this](const Request&, Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, path] : studio_.registry().scenes) out.push_back({{"id", id}});
    send_json(res, out);
  });

  s.Get("/api/characters", [this](const Request&, Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, c] : studio_.registry().characters)
      out.push_back({{"id", id}, {"height_m", c.height_m}, {"capsule_radius_m", c.capsule_radius_m}});
    send_json(res, out);
  });

  s.Get(R"(/api/scenes/([^/]+))", [this](const Request& req, Response& res) {
    if (!studio_.registry().scenes.count(req.matches[1].str()))
      throw Error(ErrorCode::NotFound, "scene '" + req.matches[1].str() + "' not found");
    send_json(res, scene_to_json(studio_.scene(req.matches[1])->graph));
  });

  s.Post("/api/projects", [this](const Request& req, Response& res) {
    const auto body = parse_body(req);
    const std::string id = body.at("id").get<std::string>();
    GenerationConfig cfg;
    if (body.contains("config")) cfg = generation_config_from_json(body.at("config"));
    Project p = studio_.create_project(id, body.at("scene_id").get<std::string>(), cfg);
    auto mtx = project_lock(id);
    std::unique_lock write(*mtx);
    if (studio_.store().exists(id)) throw Error(ErrorCode::DuplicateId, "project '" + id + "' already exists");
    studio_.store().save(p);
    send_json(res, to_json(p), 201);
  });

  s.Get(R"(/api/projects/([^/]+))", [this](const Request& req, Response& res) {
    auto mtx = project_lock(req.matches[1]);
    std::shared_lock read(*mtx);
    const Project p = studio_.store().load(req.matches[1]);
    auto out = to_json(p);
    out["stats"] = to_json(compute_stats(p));
    send_json(res, out);
  });

  s.Put(R"(/api/projects/([^/]+))", [this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    Project incoming = project_from_json(parse_body(req));
    if (incoming.id != id) throw Error(ErrorCode::Validation, "project id in body does not match the URL");
    Project checked = studio_.create_project(id, incoming.scene_id, incoming.config);
    for (const auto& pl : incoming.placements) studio_.add_placement(checked, pl);
    auto mtx = project_lock(id);
    std::unique_lock write(*mtx);
    if (!studio_.store().exists(id)) throw Error(ErrorCode::NotFound, "project '" + id + "' not found");
    studio_.store().save(incoming);
    send_json(res, to_json(incoming));
  });

  s.Post(R"(/api/projects/([^/]+)/placements)", [this](const Request& req, Response& res) {
    const Placement pl = placement_from_request(parse_body(req));
    auto mtx = project_lock(req.matches[1]);
    std::unique_lock write(*mtx);
    Project p = studio_.store().load(req.matches[1]);
    studio_.add_placement(p, pl);
    studio_.store().save(p);
    nlohmann::json placements = nlohmann::json::array();
    for (const auto& x : p.placements)
      placements.push_back({{"character_id", x.character_id},
                            {"position", {x.position.x(), x.position.y(), x.position.z()}},
                            {"facing_rad", x.facing_rad}});
    send_json(res, {{"placements", placements}}, 201);
  });

  s.Post(R"(/api/projects/([^/]+)/lines)", [this](const Request& req, Response& res) {
    const auto body = parse_body(req);
    auto mtx = project_lock(req.matches[1]);
    std::unique_lock write(*mtx);
    Project p = studio_.store().load(req.matches[1]);
    const int index = studio_.add_line(p, body.at("text").get<std::string>());
    studio_.store().save(p);
    const ScriptLine& l = p.line(index).line;
    send_json(res,
              {{"index", index},
               {"text", l.raw_text},
               {"story", {{"character", l.story.character_id}, {"verb", l.story.action_verb},
                          {"target", l.story.target_ref ? nlohmann::json(*l.story.target_ref) : nlohmann::json()}}},
               {"camera", {{"movement", to_token(l.camera.movement)}, {"scale", to_token(l.camera.scale)},
                           {"angle", to_token(l.camera.angle)}}}},
              201);
  });

  s.Post(R"(/api/projects/([^/]+)/lines/(\d+)/generate)", [this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    const int line = std::stoi(req.matches[2]);
    {
      auto mtx = project_lock(id);
      std::shared_lock read(*mtx);
      studio_.store().load(id).line(line);  // NotFound now rather than in the job
    }
    const std::string jid = submit_generate(id, line);
    send_json(res, {{"job_id", jid}, {"status", "queued"}}, 202);
  });

  s.Get(R"(/api/projects/([^/]+)/lines/(\d+)/proposals)", [this](const Request& req, Response& res) {
    auto mtx = project_lock(req.matches[1]);
    std::shared_lock read(*mtx);
    const Project p = studio_.store().load(req.matches[1]);
    const int line = std::stoi(req.matches[2]);
    const LineState& ls = p.line(line);
    if (ls.runs.empty()) throw Error(ErrorCode::NotFound, "line " + std::to_string(line) + " has no proposals yet");
    const ProposalRun& run = ls.runs.back();
    const int top = std::clamp(int_param(req, "top", 5), 0, static_cast<int>(run.proposals.size()));
    nlohmann::json props = nlohmann::json::array();
    for (int i = 0; i < top; ++i) {
      const auto& r = run.proposals[i];
      auto j = to_json(r);
      j["description"] = describe(r.tag);
      j["contact_sheet"] = "/api/proposals/" + r.id + "/contact.png";
      props.push_back(std::move(j));
    }
    auto out = run_summary(run, line);
    out["selected"] = ls.selected ? nlohmann::json(*ls.selected) : nlohmann::json();
    out["proposals"] = props;
    send_json(res, out);
  });

  s.Post(R"(/api/projects/([^/]+)/lines/(\d+)/select)", [this](const Request& req, Response& res) {
    const auto body = parse_body(req);
    auto mtx = project_lock(req.matches[1]);
    std::unique_lock write(*mtx);
    Project p = studio_.store().load(req.matches[1]);
    select_proposal(p, std::stoi(req.matches[2]), body.at("proposal_id").get<std::string>());
    studio_.store().save(p);
    send_json(res, {{"selected", body.at("proposal_id")}, {"stats", to_json(compute_stats(p))}});
  });

  s.Get(R"(/api/projects/([^/]+)/stats)", [this](const Request& req, Response& res) {
    auto mtx = project_lock(req.matches[1]);
    std::shared_lock read(*mtx);
    send_json(res, to_json(compute_stats(studio_.store().load(req.matches[1]))));
  });

  s.Get(R"(/api/proposals/([^/]+)/frames/(\d+)\.png)", [this](const Request& req, Response& res) {
    const std::string pid = req.matches[1];
    const std::string project = project_of(pid);
    auto mtx = project_lock(project);
    std::shared_lock read(*mtx);
    const Project p = studio_.store().load(project);
    const ImageSize size{int_param(req, "width", p.config.preview_size.width),
                         int_param(req, "height", p.config.preview_size.height)};
    if (size.width < 1 || size.height < 1 || size.width > 4096 || size.height > 4096)
      throw Error(ErrorCode::Validation, "frame size must be within 1..4096");
    send_png(res, studio_.render_proposal_frame(p, pid, std::stoi(req.matches[2]), size));
  });

  s.Get(R"(/api/proposals/([^/]+)/contact\.png)", [this](const Request& req, Response& res) {
    const std::string pid = req.matches[1];
    const std::string project = project_of(pid);
    auto mtx = project_lock(project);
    std::shared_lock read(*mtx);
    const Project p = studio_.store().load(project);
    send_png(res, studio_.contact_sheet_for(p, pid, p.config.preview_size));
  });

  s.Get(R"(/api/jobs/([^/]+))", [this](const Request& req, Response& res) {
    const auto j = job(req.matches[1]);
    if (!j) throw Error(ErrorCode::NotFound, "job '" + req.matches[1].str() + "' not found");
    send_json(res, job_json(*j));
  });
}

}  // namespace previs
