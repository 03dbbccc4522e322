#include <pybind11/complex.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fradrc/adrc.hpp"
#include "fradrc/analysis.hpp"
#include "fradrc/discretize.hpp"
#include "fradrc/error.hpp"
#include "fradrc/fracpoly.hpp"
#include "fradrc/gl.hpp"
#include "fradrc/plant.hpp"
#include "fradrc/rational.hpp"
#include "fradrc/stability.hpp"

namespace py = pybind11;
using namespace fradrc;

namespace {

Rational as_rational(const py::handle& h) {
  if (py::isinstance<Rational>(h)) return h.cast<Rational>();
  if (py::isinstance<py::int_>(h)) return Rational(h.cast<std::int64_t>());
  if (py::isinstance<py::tuple>(h)) {
    auto t = h.cast<py::tuple>();
    return Rational(t[0].cast<std::int64_t>(), t[1].cast<std::int64_t>());
  }
  return to_rational(h.cast<double>(), 1000);
}

FracPoly poly_from(const py::iterable& terms) {
  std::vector<Term> out;
  for (auto item : terms) {
    auto t = item.cast<py::tuple>();
    out.push_back({t[0].cast<double>(), as_rational(t[1])});
  }
  return FracPoly(std::move(out));
}

}  // namespace

PYBIND11_MODULE(_fradrc, m) {
  m.doc() = "Fractional-order ADRC toolkit";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DegenerateSystem>(m, "DegenerateSystem", base.ptr());
  py::register_exception<IncommensurateOrder>(m, "IncommensurateOrder", base.ptr());
  py::register_exception<OrderConstraint>(m, "OrderConstraint", base.ptr());
  py::register_exception<Unsupported>(m, "Unsupported", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<NotFound>(m, "NotFound", base.ptr());
  py::register_exception<PoisonedState>(m, "PoisonedState", base.ptr());
  py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
  py::register_exception<FitFailure>(m, "FitFailure", base.ptr());

  py::class_<Rational>(m, "Rational")
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("num"), py::arg("den") = 1)
      .def_property_readonly("num", &Rational::num)
      .def_property_readonly("den", &Rational::den)
      .def("__float__", &Rational::to_double)
      .def("__str__", &Rational::str)
      .def("__repr__", [](const Rational& r) { return "Rational(" + r.str() + ")"; })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(py::self / py::self)
      .def(py::self == py::self)
      .def(py::self < py::self)
      .def("__hash__", [](const Rational& r) { return py::hash(py::make_tuple(r.num(), r.den())); });
  m.def("to_rational", &to_rational, py::arg("value"), py::arg("max_den") = 100);

  m.def("gl_coefficients", [](double alpha, int count) { return gl_coefficients(alpha, count).coeffs; },
        py::arg("alpha"), py::arg("count"));

  // Polynomials are given as [(coeff, order), ...]; an order may be an int, a
  // Rational, a (num, den) tuple or a float (rationalized).
  py::class_<FracPoly>(m, "FracPoly")
      .def(py::init(&poly_from), py::arg("terms"))
      .def_property_readonly("terms",
                             [](const FracPoly& p) {
                               py::list out;
                               for (const Term& t : p.terms()) out.append(py::make_tuple(t.coeff, t.order));
                               return out;
                             })
      .def("degree", &FracPoly::degree)
      .def("eval", &FracPoly::eval)
      .def("eval_jw", &FracPoly::eval_jw)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def("__str__", &FracPoly::str);

  py::class_<FracRational>(m, "FracRational")
      .def(py::init<FracPoly, FracPoly>(), py::arg("num"), py::arg("den"))
      .def_property_readonly("num", &FracRational::num)
      .def_property_readonly("den", &FracRational::den)
      .def("eval", &FracRational::eval)
      .def("eval_jw", &FracRational::eval_jw);
  m.def("commensurate", [](const FracPoly& p, const py::handle& lam) { return commensurate(p, as_rational(lam)); });

  py::class_<Band>(m, "Band")
      .def(py::init([](double lo, double hi) { return Band{lo, hi}; }), py::arg("lo"), py::arg("hi"))
      .def_readwrite("lo", &Band::lo)
      .def_readwrite("hi", &Band::hi);
  m.def("default_band", &default_band);

  py::class_<DigitalFilter>(m, "DigitalFilter")
      .def("step", &DigitalFilter::step)
      .def("reset", &DigitalFilter::reset)
      .def("response", &DigitalFilter::response)
      .def("b", &DigitalFilter::b)
      .def("a", &DigitalFilter::a)
      .def_property_readonly("fs", &DigitalFilter::fs)
      .def_property_readonly("poisoned", &DigitalFilter::poisoned)
      .def("sections", [](const DigitalFilter& f) {
        py::list out;
        for (const auto& s : f.sections()) out.append(py::make_tuple(s.b, s.a));
        return out;
      });
  m.def("gl_fir", &gl_fir, py::arg("alpha"), py::arg("fs"), py::arg("memory_len"));
  m.def("gl_inverse", &gl_inverse, py::arg("alpha"), py::arg("fs"), py::arg("memory_len"));
  m.def("iir_fit", [](double alpha, double fs, int order, Band band) { return iir_fit(alpha, fs, order, band); },
        py::arg("alpha"), py::arg("fs"), py::arg("order"), py::arg("band"));
  m.def("ideal_deviation",
        [](const DigitalFilter& f, double alpha, Band band) {
          const Deviation d = ideal_deviation(f, alpha, band);
          return py::make_tuple(d.max_mag_db, d.max_phase_deg);
        },
        py::arg("filter"), py::arg("alpha"), py::arg("band"));

  py::class_<PlantModel>(m, "PlantModel")
      .def(py::init([](std::vector<double> a, double b) { return PlantModel{std::move(a), b}; }), py::arg("a"),
           py::arg("b") = 1.0)
      .def_readwrite("a", &PlantModel::a)
      .def_readwrite("b", &PlantModel::b)
      .def("order", &PlantModel::order)
      .def("transfer", &PlantModel::transfer);

  py::class_<DisturbanceProfile>(m, "DisturbanceProfile")
      .def(py::init<>())
      .def_static("step", &DisturbanceProfile::step, py::arg("t_on"), py::arg("amplitude"))
      .def("at", &DisturbanceProfile::at);
  m.def("simulate_plant",
        [](const PlantModel& p, std::vector<double> u, const DisturbanceProfile& d, double dt, double T) {
          return simulate_plant(p, u, d, dt, T);
        },
        py::arg("plant"), py::arg("u"), py::arg("disturbance") = DisturbanceProfile{}, py::arg("dt"), py::arg("T"));

  py::enum_<Variant>(m, "Variant").value("IO", Variant::IO).value("FO", Variant::FO).value("IFO", Variant::IFO);
  py::enum_<FilterBank>(m, "FilterBank")
      .value("Fitted", FilterBank::Fitted)
      .value("GlOracle", FilterBank::GlOracle);
  py::enum_<LambdaConvention>(m, "LambdaConvention")
      .value("Lcm", LambdaConvention::Lcm)
      .value("Paper", LambdaConvention::Paper);
  py::enum_<Verdict>(m, "Verdict")
      .value("Stable", Verdict::Stable)
      .value("Unstable", Verdict::Unstable)
      .value("Marginal", Verdict::Marginal)
      .value("Indeterminate", Verdict::Indeterminate);

  py::class_<AdrcOrders>(m, "AdrcOrders")
      .def_readonly("m", &AdrcOrders::m)
      .def_readonly("chi", &AdrcOrders::chi)
      .def_readonly("gamma", &AdrcOrders::gamma)
      .def_readonly("nu", &AdrcOrders::nu)
      .def_readonly("n", &AdrcOrders::n)
      .def_readonly("warnings", &AdrcOrders::warnings);
  m.def("derive_orders",
        [](int mm, const py::handle& chi, const py::handle& nu) {
          return derive_orders(mm, as_rational(chi), as_rational(nu));
        },
        py::arg("m"), py::arg("chi"), py::arg("nu"));
  m.def("eso_gains", &eso_gains, py::arg("state_count"), py::arg("omega0"));

  py::class_<TrackingConfig>(m, "TrackingConfig")
      .def_readwrite("kp", &TrackingConfig::kp)
      .def_readwrite("kd", &TrackingConfig::kd)
      .def_readonly("omega_c", &TrackingConfig::omega_c)
      .def_readonly("omega_g", &TrackingConfig::omega_g);
  m.def("tracking_gains",
        [](const AdrcOrders& o, double wc, double wg) { return tracking_gains(o, wc, wg); },
        py::arg("orders"), py::arg("omega_c"), py::arg("omega_g"));
  m.def("tracking_from_gains", &tracking_from_gains, py::arg("orders"), py::arg("kp"), py::arg("kd"));

  py::class_<EsoConfig>(m, "EsoConfig")
      .def_readonly("variant", &EsoConfig::variant)
      .def_readonly("L", &EsoConfig::L)
      .def_readwrite("omega0", &EsoConfig::omega0)
      .def_readwrite("b0", &EsoConfig::b0)
      .def_readwrite("fs", &EsoConfig::fs)
      .def_readwrite("filter_order", &EsoConfig::filter_order)
      .def_readwrite("band", &EsoConfig::band)
      .def_readwrite("bank", &EsoConfig::bank)
      .def_readwrite("gl_memory", &EsoConfig::gl_memory)
      .def("state_count", &EsoConfig::state_count)
      .def("q", &EsoConfig::q);
  m.def("make_ifo_eso", &make_ifo_eso, py::arg("orders"), py::arg("omega0"), py::arg("b0"), py::arg("fs"));
  m.def("make_io_eso", &make_io_eso, py::arg("m"), py::arg("omega0"), py::arg("b0"), py::arg("fs"));
  m.def("make_fo_eso",
        [](int mm, const py::handle& chi, double w0, double b0, double fs) {
          return make_fo_eso(mm, as_rational(chi), w0, b0, fs);
        },
        py::arg("m"), py::arg("chi"), py::arg("omega0"), py::arg("b0"), py::arg("fs"));

  py::class_<AdrcDesign>(m, "AdrcDesign")
      .def(py::init([](EsoConfig eso, TrackingConfig trk) { return AdrcDesign{"", std::move(eso), std::move(trk)}; }),
           py::arg("eso"), py::arg("trk"))
      .def_readwrite("eso", &AdrcDesign::eso)
      .def_readwrite("trk", &AdrcDesign::trk);
  m.def("make_io_design", &make_io_design, py::arg("m"), py::arg("omega0"), py::arg("b0"), py::arg("fs"),
        py::arg("k_ip"), py::arg("k_id"));
  m.def("scale_gain", &scale_gain, py::arg("design"), py::arg("K"));

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("t", &SimResult::t)
      .def_readonly("r", &SimResult::r)
      .def_readonly("y", &SimResult::y)
      .def_readonly("u", &SimResult::u)
      .def_readonly("z", &SimResult::z)
      .def_readonly("f_hat", &SimResult::f_hat)
      .def_readonly("f_true", &SimResult::f_true)
      .def_readonly("d", &SimResult::d)
      .def_readonly("diverged", &SimResult::diverged);
  m.def("closed_loop_simulate", &closed_loop_simulate, py::arg("plant"), py::arg("design"), py::arg("ref"),
        py::arg("disturbance"), py::arg("dt"), py::arg("T"), py::call_guard<py::gil_scoped_release>());

  m.def("open_loop",
        [](const PlantModel& p, const AdrcDesign& d) -> py::tuple {
          if (d.eso.variant == Variant::IFO) {
            OpenLoop ol = open_loop_tf(p, d);
            return py::make_tuple(ol.exact, ol.approx);
          }
          return py::make_tuple(open_loop_generic(p, d), approx_open_loop(d));
        },
        py::arg("plant"), py::arg("design"), "Returns (exact, perfect-estimation) open loops.");
  m.def("plant_with_eso", [](const EsoConfig& c, const PlantModel& p) { return eso_transfer(c, p).P; },
        py::arg("eso"), py::arg("plant"));

  py::class_<CommensuratePoly>(m, "CommensuratePoly")
      .def(py::init([](std::vector<double> c, const py::handle& lam) {
             return CommensuratePoly{std::move(c), as_rational(lam)};
           }),
           py::arg("coeffs"), py::arg("lam"))
      .def_readonly("coeffs", &CommensuratePoly::coeffs)
      .def_readonly("lam", &CommensuratePoly::lambda)
      .def("degree", &CommensuratePoly::degree);
  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("roots", &StabilityReport::roots)
      .def_readonly("min_arg_margin", &StabilityReport::min_arg_margin)
      .def_readonly("verdict", &StabilityReport::verdict)
      .def_readonly("condition_warning", &StabilityReport::condition_warning)
      .def_readonly("residual", &StabilityReport::residual)
      .def_readonly("lam", &StabilityReport::lambda)
      .def_readonly("degree", &StabilityReport::degree);
  m.def("char_poly_closed", &char_poly_closed, py::arg("plant"), py::arg("design"),
        py::arg("convention") = LambdaConvention::Lcm);
  m.def("char_poly_observer", &char_poly_observer, py::arg("eso"), py::arg("convention") = LambdaConvention::Lcm);
  m.def("sector_check", &sector_check, py::arg("poly"));
  m.def("poly_roots", [](std::vector<double> c) { return poly_roots(c); }, py::arg("coeffs_desc"));

  py::class_<RouthResult>(m, "RouthResult")
      .def_readonly("rows", &RouthResult::rows)
      .def_readonly("first_column", &RouthResult::first_column)
      .def_readonly("hurwitz", &RouthResult::hurwitz)
      .def_readonly("epsilon_used", &RouthResult::epsilon_used)
      .def_readonly("zero_row", &RouthResult::zero_row)
      .def_readonly("sign_changes", &RouthResult::sign_changes);
  m.def("routh_table", [](std::vector<double> c) { return routh_table(c); }, py::arg("coeffs_desc"));
  m.def("kharitonov_eso", [](std::vector<double> beta) { return kharitonov_eso(beta); }, py::arg("beta"));
  m.def("find_omega0", &find_omega0, py::arg("plant"), py::arg("kp"), py::arg("kd1"), py::arg("lo") = 1e-2,
        py::arg("hi") = 1e7);

  py::class_<Margins>(m, "Margins")
      .def_readonly("omega_gc", &Margins::omega_gc)
      .def_readonly("phase_margin", &Margins::phase_margin)
      .def_readonly("crossings", &Margins::crossings)
      .def_readonly("phase_margins", &Margins::phase_margins)
      .def_readonly("multiple", &Margins::multiple);
  m.def("margins", &margins, py::arg("g"), py::arg("lo") = 1e-3, py::arg("hi") = 1e6,
        py::arg("points_per_decade") = 200);
  m.def("mse_delta",
        [](const FracRational& P, double order, double lo, double hi, int ppd) {
          return mse_delta(P, order, FreqGrid::make(lo, hi, ppd)).mse;
        },
        py::arg("P"), py::arg("ideal_order"), py::arg("lo") = 0.1, py::arg("hi") = 1e4,
        py::arg("points_per_decade") = 100);

  py::class_<StepMetrics>(m, "StepMetrics")
      .def_readonly("rise_time", &StepMetrics::rise_time)
      .def_readonly("peak_time", &StepMetrics::peak_time)
      .def_readonly("overshoot", &StepMetrics::overshoot)
      .def_readonly("settling_time", &StepMetrics::settling_time)
      .def_readonly("settled", &StepMetrics::settled)
      .def_readonly("steady_state_error", &StepMetrics::steady_state_error)
      .def_readonly("y_max", &StepMetrics::y_max)
      .def_readonly("y_ss", &StepMetrics::y_ss)
      .def_readonly("dist_max_deviation", &StepMetrics::dist_max_deviation)
      .def_readonly("dist_recovery_time", &StepMetrics::dist_recovery_time)
      .def_readonly("recovered", &StepMetrics::recovered);
  m.def("step_metrics", &step_metrics, py::arg("sim"), py::arg("r"), py::arg("disturbance") = DisturbanceProfile{},
        py::arg("band") = 0.02);
}
