#include <gtest/gtest.h>

#include "qhm/io.hpp"

using namespace qhm;

namespace {

const ManifoldParams kDesk = ManifoldParams::desk();
const Grid kGrid = Grid::desk();

std::string field_of(const json& j) {
  try {
    field_from_json<ElementTag>(j);
  } catch (const FormatError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Format, Reals) {
  EXPECT_EQ(format_real(1.0), "1.0");
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(-0.0), "0.0");
  EXPECT_EQ(format_real(-3.0), "-3.0");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Format, Complex) {
  EXPECT_EQ(format_complex(cd(1.0, 0.0)), "1.0+0.0i");
  EXPECT_EQ(format_complex(cd(1.0, -2.5)), "1.0-2.5i");
  EXPECT_EQ(format_complex(cd(-0.0, -0.0)), "0.0+0.0i");
}

TEST(Json, ElementRoundTripIsExact) {
  const Element e = random_element(kDesk, kGrid, 3, 1.0);
  const json j = json::parse(to_json(e).dump());
  const Element back = field_from_json<ElementTag>(j);
  EXPECT_EQ(back.data(), e.data());
  EXPECT_EQ(back.params(), e.params());
  EXPECT_EQ(back.grid(), e.grid());
}

TEST(Json, StateKindIsChecked) {
  const StateVector xi = random_state(kDesk, kGrid, 4);
  const json j = to_json(xi);
  EXPECT_EQ(j.at("kind"), "state");
  EXPECT_EQ(field_of(j), "kind");
  EXPECT_NO_THROW(field_from_json<StateTag>(j));
}

TEST(Json, MalformedFieldsAreNamed) {
  const json good = to_json(Element(kDesk, kGrid));
  EXPECT_EQ(field_of(good), "");

  json j = good;
  j["params"].erase("hbar");
  EXPECT_EQ(field_of(j), "params.hbar");

  j = good;
  j["params"]["c"] = "one";
  EXPECT_EQ(field_of(j), "params.c");

  j = good;
  j["grid"]["nx"] = 15;
  EXPECT_EQ(field_of(j), "grid");

  j = good;
  j["data"].erase(j["data"].size() - 1);
  EXPECT_EQ(field_of(j), "data");

  j = good;
  j["data"][6] = "x";
  EXPECT_EQ(field_of(j), "data[6]");

  j = good;
  j.erase("data");
  EXPECT_EQ(field_of(j), "data");

  EXPECT_EQ(field_of(json::array()), "document");
}

TEST(Json, UnreadableFileIsFormatError) { EXPECT_THROW(read_element("/nonexistent/qhm.json"), FormatError); }

TEST(Report, CsvAndJsonShape) {
  const CheckResult r{"a.b", "ref, with comma", 0.5, true, 1e-3, 1.5e-3};
  const json j = to_json(r);
  EXPECT_EQ(j.at("check"), "a.b");
  EXPECT_EQ(j.at("paper_ref"), "ref, with comma");
  EXPECT_EQ(j.at("pass"), true);
  EXPECT_DOUBLE_EQ(j.at("margin").get<double>(), 0.5);
  EXPECT_EQ(to_csv({r}), "check,paper_ref,margin,pass,measured,tolerance\na.b,\"ref, with comma\",0.5,true,0.001,0.0015\n");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}
