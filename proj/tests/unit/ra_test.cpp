// Copyright 2026 The VPKIaaS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "vpki/ra.hpp"

#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "errc_matchers.hpp"
#include "fixture.hpp"

namespace vpki {
namespace {

using testing::code_of;
using testing::make_csrs;
using testing::World;

// Wraps an endpoint so a test can cut it off, either completely or for one
// message type, and keeps a copy of every response body.
class Faulty final : public Endpoint {
 public:
  explicit Faulty(std::shared_ptr<Endpoint> inner) : inner_(std::move(inner)) {}

  Envelope call(Envelope request, std::chrono::milliseconds deadline) override {
    if (down_ || (fail_type_ && *fail_type_ == request.type)) {
      fail(Errc::ConnectionFailed, "cut off by test");
    }
    auto resp = inner_->call(std::move(request), deadline);
    std::lock_guard lock(mu_);
    seen_.push_back(resp);
    return resp;
  }

  void set_down(bool down) { down_ = down; }
  void fail_only(std::optional<MessageType> t) { fail_type_ = t; }
  std::vector<Envelope> seen() {
    std::lock_guard lock(mu_);
    return seen_;
  }

 private:
  std::shared_ptr<Endpoint> inner_;
  std::atomic<bool> down_{false};
  std::optional<MessageType> fail_type_;
  std::mutex mu_;
  std::vector<Envelope> seen_;
};

struct RaWorld {
  explicit RaWorld(std::vector<std::string> pca_ids = {"pca"}) : w(pca_ids) {
    ltca = std::make_shared<Faulty>(w.ltca_ep);
    std::map<std::string, std::shared_ptr<Endpoint>> eps;
    for (const auto& [id, ep] : w.pca_eps) {
      pcas[id] = std::make_shared<Faulty>(ep);
      eps[id] = pcas[id];
    }
    ra = std::make_unique<Ra>(RaConfig{}, w.pki.ra, ltca, eps);
  }

  std::vector<Certificate> issue(const VehicleCredential& v, UnixSeconds start,
                                 std::int64_t duration, const std::string& pca = "pca") {
    auto t = w.ticket(v, start, duration, pca);
    return w.pca(pca).issue_pseudonyms({t, make_csrs(t.max_pseudonyms)});
  }

  World w;
  std::shared_ptr<Faulty> ltca;
  std::map<std::string, std::shared_ptr<Faulty>> pcas;
  std::unique_ptr<Ra> ra;
};

std::set<std::string> hexes(const std::vector<CertSerial>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(s.hex());
  return out;
}

std::set<std::string> hexes(const std::vector<Certificate>& v) {
  std::set<std::string> out;
  for (const auto& c : v) out.insert(c.serial().hex());
  return out;
}

TEST(Resolve, EndToEndAgainstGroundTruth) {
  RaWorld rw;
  auto t0 = testing::aligned_now(300);
  // Ground truth kept by the fixture: which vehicle got which pseudonym.
  std::map<std::string, CertSerial> owner;
  std::vector<VehicleCredential> cars;
  for (int i = 0; i < 4; ++i) {
    cars.push_back(rw.w.vehicle("car-" + std::to_string(i)));
    for (const auto& p : rw.issue(cars.back(), t0 + 600 * i, 900)) {
      owner.emplace(p.serial().hex(), cars.back().ltc.serial());
    }
  }
  for (const auto& [serial_hex, ltc] : owner) {
    auto r = rw.ra->resolve(CertSerial::from_hex(serial_hex));
    EXPECT_EQ(r.ltc_serial, ltc);
    EXPECT_EQ(r.pseudonym_serial.hex(), serial_hex);
    EXPECT_TRUE(r.revoked_pseudonym_serials.empty());
  }
  // Resolution changed nothing.
  EXPECT_TRUE(rw.w.pca().get_crl().revoked_serials.empty());
  EXPECT_NO_THROW(rw.w.ticket(cars[0], t0, 300));
}

TEST(Resolve, UnknownSerial) {
  RaWorld rw;
  EXPECT_EQ(code_of([&] { rw.ra->resolve(CertSerial::random()); }), Errc::UnknownSerial);
}

TEST(Resolve, StoppedPcaIsUpstreamUnavailable) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 600);
  rw.pcas.at("pca")->set_down(true);
  EXPECT_EQ(code_of([&] { rw.ra->resolve(ps[0].serial()); }), Errc::UpstreamUnavailable);
  rw.pcas.at("pca")->set_down(false);
  rw.ltca->set_down(true);
  EXPECT_EQ(code_of([&] { rw.ra->resolve(ps[0].serial()); }), Errc::UpstreamUnavailable);
}

TEST(Resolve, NeitherAuthorityAloneLinksPseudonymToLtc) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 600);
  auto pseudonym = ps[0].serial();
  auto ltc = v.ltc.serial();
  rw.ra->resolve(pseudonym);

  auto has = [](const Bytes& body, const CertSerial& s) {
    auto n = s.view();
    return std::search(body.begin(), body.end(), n.begin(), n.end()) != body.end();
  };
  auto pca_seen = rw.pcas.at("pca")->seen();
  auto ltca_seen = rw.ltca->seen();
  ASSERT_FALSE(pca_seen.empty());
  ASSERT_FALSE(ltca_seen.empty());
  for (const auto& e : pca_seen) EXPECT_FALSE(has(e.body, ltc));
  for (const auto& e : ltca_seen) EXPECT_FALSE(has(e.body, pseudonym));
}

TEST(Revoke, TwelvePseudonymsAndTheLtc) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 3600);
  ASSERT_EQ(ps.size(), 12u);
  auto r = rw.ra->revoke_vehicle(ps[7].serial());
  EXPECT_EQ(r.ltc_serial, v.ltc.serial());
  EXPECT_EQ(hexes(r.revoked_pseudonym_serials), hexes(ps));
  EXPECT_TRUE(hexes(r.revoked_pseudonym_serials).count(ps[7].serial().hex()));
  EXPECT_EQ(code_of([&] { rw.w.ticket(v, system_now(), 300); }), Errc::RevokedLtc);

  auto crl = rw.w.pca().get_crl();
  EXPECT_EQ(hexes(crl.revoked_serials), hexes(ps));

  auto again = rw.ra->revoke_vehicle(ps[0].serial());
  EXPECT_EQ(hexes(again.revoked_pseudonym_serials), hexes(r.revoked_pseudonym_serials));
  EXPECT_EQ(rw.w.pca().get_crl().list_body(), crl.list_body());
}

TEST(Revoke, CascadeCoversEveryTicketAtEveryPca) {
  RaWorld rw({"pca", "pcb"});
  auto bad = rw.w.vehicle("bad");
  auto good = rw.w.vehicle("good");
  auto t0 = testing::aligned_now(300);
  auto a1 = rw.issue(bad, t0, 900, "pca");
  auto a2 = rw.issue(bad, t0 + 3600, 600, "pcb");
  auto a3 = rw.issue(bad, t0 + 7200, 300, "pca");
  auto bystander = rw.issue(good, t0, 900, "pca");
  // An issued but never redeemed ticket is in scope too and must not break
  // the cascade.
  rw.w.ticket(bad, t0 + 9000, 300, "pcb");

  auto r = rw.ra->revoke_vehicle(a2[1].serial());
  std::set<std::string> all = hexes(a1);
  for (const auto& s : hexes(a2)) all.insert(s);
  for (const auto& s : hexes(a3)) all.insert(s);
  EXPECT_EQ(hexes(r.revoked_pseudonym_serials), all);
  EXPECT_TRUE(std::is_sorted(r.revoked_pseudonym_serials.begin(), r.revoked_pseudonym_serials.end()));

  auto crl_a = hexes(rw.w.pca("pca").get_crl().revoked_serials);
  auto crl_b = hexes(rw.w.pca("pcb").get_crl().revoked_serials);
  for (const auto& p : a1) EXPECT_TRUE(crl_a.count(p.serial().hex()));
  for (const auto& p : a3) EXPECT_TRUE(crl_a.count(p.serial().hex()));
  for (const auto& p : a2) EXPECT_TRUE(crl_b.count(p.serial().hex()));
  for (const auto& p : bystander) EXPECT_FALSE(crl_a.count(p.serial().hex()));
  EXPECT_NO_THROW(rw.w.ticket(good, system_now(), 300));
}

TEST(Revoke, LtcaLegFailureIsReportedAndRetryCompletes) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 1800);
  rw.ltca->fail_only(MessageType::RevokeLtcRequest);
  try {
    rw.ra->revoke_vehicle(ps[0].serial());
    FAIL() << "expected PartialRevocation";
  } catch (const VpkiError& e) {
    EXPECT_EQ(e.code(), Errc::PartialRevocation);
    EXPECT_EQ(e.step(), "ltca");
  }
  // The PCA leg went through; the LTC did not.
  EXPECT_EQ(hexes(rw.w.pca().get_crl().revoked_serials), hexes(ps));
  EXPECT_NO_THROW(rw.w.ticket(v, system_now(), 300));

  rw.ltca->fail_only(std::nullopt);
  auto r = rw.ra->revoke_vehicle(ps[0].serial());
  EXPECT_EQ(hexes(r.revoked_pseudonym_serials), hexes(ps));
  EXPECT_EQ(code_of([&] { rw.w.ticket(v, system_now(), 300); }), Errc::RevokedLtc);
}

TEST(Revoke, PcaLegFailureNamesThatPca) {
  RaWorld rw({"pca", "pcb"});
  auto v = rw.w.vehicle("car");
  auto t0 = testing::aligned_now(300);
  auto on_a = rw.issue(v, t0, 600, "pca");
  auto on_b = rw.issue(v, t0 + 3600, 600, "pcb");
  rw.pcas.at("pcb")->fail_only(MessageType::RevokeByTicketRequest);
  try {
    rw.ra->revoke_vehicle(on_a[0].serial());
    FAIL();
  } catch (const VpkiError& e) {
    EXPECT_EQ(e.code(), Errc::PartialRevocation);
    EXPECT_EQ(e.step(), "pca:pcb");
  }
  rw.pcas.at("pcb")->fail_only(std::nullopt);
  auto r = rw.ra->revoke_vehicle(on_a[0].serial());
  EXPECT_EQ(r.revoked_pseudonym_serials.size(), on_a.size() + on_b.size());
}

TEST(Revoke, ConcurrentRevocationsConverge) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 3600);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&, i] {
      auto r = rw.ra->revoke_vehicle(ps[static_cast<std::size_t>(i)].serial());
      if (hexes(r.revoked_pseudonym_serials) == hexes(ps)) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 6);
  EXPECT_EQ(rw.w.pca().get_crl().revoked_serials.size(), 12u);
}

TEST(Service, ResolveOverTheWire) {
  RaWorld rw;
  auto v = rw.w.vehicle("car");
  auto ps = rw.issue(v, testing::aligned_now(300), 600);
  LocalEndpoint ep(rw.ra->handler());
  auto body = rpc(ep, MessageType::ResolveRequest, ResolveRequest{ps[0].serial(), false}.encode(),
                  MessageType::ResolveResponse, std::chrono::seconds(5));
  EXPECT_EQ(ResolutionResult::decode(body).ltc_serial, v.ltc.serial());
  auto resp = ep.call({1, MessageType::ResolveRequest, 1,
                       ResolveRequest{CertSerial::random(), false}.encode()},
                      std::chrono::seconds(5));
  EXPECT_EQ(code_of([&] { expect_body(resp, MessageType::ResolveResponse); }),
            Errc::UnknownSerial);
}

}  // namespace
}  // namespace vpki
