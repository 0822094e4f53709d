#ifndef FPUT_DOP853_HPP
#define FPUT_DOP853_HPP

/** @file
 * Explicit Runge-Kutta method of order 8(5,3) by Dormand and Prince with the
 * step-size controller of Hairer's DOP853. Only the stepping core is kept:
 * no dense output and no stiffness detection.
 *
 * Rhs is any callable `void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)`.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace fput {

struct AdaptiveOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double initial_step = 1e-3;
    double safety = 0.9;
    double max_step = std::numeric_limits<double>::infinity();
};

enum class StepOutcome { Accepted, Underflow };

namespace dop853_tableau {
// clang-format off
inline constexpr double c2 = 0.526001519587677318785587544488e-01, c3 = 0.789002279381515978178381316732e-01,
    c4 = 0.118350341907227396726757197510e+00, c5 = 0.281649658092772603273242802490e+00,
    c6 = 0.333333333333333333333333333333e+00, c7 = 0.25e+00, c8 = 0.307692307692307692307692307692e+00,
    c9 = 0.651282051282051282051282051282e+00, c10 = 0.6e+00, c11 = 0.857142857142857142857142857142e+00;
inline constexpr double b1 = 5.42937341165687622380535766363e-2, b6 = 4.45031289275240888144113950566e0,
    b7 = 1.89151789931450038304281599044e0, b8 = -5.8012039600105847814672114227e0,
    b9 = 3.1116436695781989440891606237e-1, b10 = -1.52160949662516078556178806805e-1,
    b11 = 2.01365400804030348374776537501e-1, b12 = 4.47106157277725905176885569043e-2;
inline constexpr double bhh1 = 0.244094488188976377952755905512e+00, bhh2 = 0.733846688281611857341361741547e+00,
    bhh3 = 0.220588235294117647058823529412e-01;
inline constexpr double er1 = 0.1312004499419488073250102996e-01, er6 = -0.1225156446376204440720569753e+01,
    er7 = -0.4957589496572501915214079952e+00, er8 = 0.1664377182454986536961530415e+01,
    er9 = -0.3503288487499736816886487290e+00, er10 = 0.3341791187130174790297318841e+00,
    er11 = 0.8192320648511571246570742613e-01, er12 = -0.2235530786388629525884427845e-01;
inline constexpr double a21 = 5.26001519587677318785587544488e-2;
inline constexpr double a31 = 1.97250569845378994544595329183e-2, a32 = 5.91751709536136983633785987549e-2;
inline constexpr double a41 = 2.95875854768068491816892993775e-2, a43 = 8.87627564304205475450678981324e-2;
inline constexpr double a51 = 2.41365134159266685502369798665e-1, a53 = -8.84549479328286085344864962717e-1,
    a54 = 9.24834003261792003115737966543e-1;
inline constexpr double a61 = 3.7037037037037037037037037037e-2, a64 = 1.70828608729473871279604482173e-1,
    a65 = 1.25467687566822425016691814123e-1;
inline constexpr double a71 = 3.7109375e-2, a74 = 1.70252211019544039314978060272e-1,
    a75 = 6.02165389804559606850219397283e-2, a76 = -1.7578125e-2;
inline constexpr double a81 = 3.70920001185047927108779319836e-2, a84 = 1.70383925712239993810214054705e-1,
    a85 = 1.07262030446373284651809199168e-1, a86 = -1.53194377486244017527936158236e-2,
    a87 = 8.27378916381402288758473766002e-3;
inline constexpr double a91 = 6.24110958716075717114429577812e-1, a94 = -3.36089262944694129406857109825e0,
    a95 = -8.68219346841726006818189891453e-1, a96 = 2.75920996994467083049415600797e1,
    a97 = 2.01540675504778934086186788979e1, a98 = -4.34898841810699588477366255144e1;
inline constexpr double a101 = 4.77662536438264365890433908527e-1, a104 = -2.48811461997166764192642586468e0,
    a105 = -5.90290826836842996371446475743e-1, a106 = 2.12300514481811942347288949897e1,
    a107 = 1.52792336328824235832596922938e1, a108 = -3.32882109689848629194453265587e1,
    a109 = -2.03312017085086261358222928593e-2;
inline constexpr double a111 = -9.3714243008598732571704021658e-1, a114 = 5.18637242884406370830023853209e0,
    a115 = 1.09143734899672957818500254654e0, a116 = -8.14978701074692612513997267357e0,
    a117 = -1.85200656599969598641566180701e1, a118 = 2.27394870993505042818970056734e1,
    a119 = 2.49360555267965238987089396762e0, a1110 = -3.0467644718982195003823669022e0;
inline constexpr double a121 = 2.27331014751653820792359768449e0, a124 = -1.05344954667372501984066689879e1,
    a125 = -2.00087205822486249909675718444e0, a126 = -1.79589318631187989172765950534e1,
    a127 = 2.79488845294199600508499808837e1, a128 = -2.85899827713502369474065508674e0,
    a129 = -8.87285693353062954433549289258e0, a1210 = 1.23605671757943030647266201528e1,
    a1211 = 6.43392746015763530355970484046e-1;
// clang-format on
} // namespace dop853_tableau

/// Adaptive stepper. Owns its stage scratch; one instance per trajectory.
template <class Rhs>
class Dop853 {
public:
    Dop853(Rhs rhs, Eigen::Index dim, AdaptiveOptions opts = {})
        : rhs_(std::move(rhs)), opts_(opts), h_(opts.initial_step), k1_(dim), k2_(dim), k3_(dim), k4_(dim),
          k5_(dim), k6_(dim), k7_(dim), k8_(dim), k9_(dim), k10_(dim), ytmp_(dim), ynew_(dim)
    {
    }

    /// Must be called before the first step and whenever y was modified
    /// outside the stepper (the first stage is reused across steps).
    void reset(double t, const Eigen::VectorXd& y)
    {
        rhs_(t, y, k1_);
        ++evaluations_;
        have_k1_ = true;
        reject_ = false;
    }

    double step_size() const { return h_; }
    std::size_t accepted_steps() const { return accepted_; }
    std::size_t rejected_steps() const { return rejected_; }
    std::size_t evaluations() const { return evaluations_; }

    /// Takes one accepted step from t towards t_end (never past it), updating
    /// t and y in place. Returns Underflow when the step size collapses.
    StepOutcome step(double& t, Eigen::VectorXd& y, double t_end)
    {
        using std::abs;
        constexpr double uround = 2.3e-16;
        constexpr double fac1 = 1.0 / 3.0, fac2 = 6.0, expo = 1.0 / 8.0;
        if (!have_k1_)
            reset(t, y);
        for (;;) {
            if (0.1 * abs(h_) <= abs(t) * uround || h_ < std::numeric_limits<double>::min())
                return StepOutcome::Underflow;
            bool last = false;
            double h = std::min(h_, opts_.max_step);
            if (t + 1.01 * h >= t_end) {
                h = t_end - t;
                last = true;
            }
            stages(t, y, h);
            const double err = error_norm(y, h);
            if (!std::isfinite(err)) {
                // Non-finite stage values: shrink hard and retry.
                h_ = h * 0.1;
                reject_ = true;
                ++rejected_;
                continue;
            }
            double fac = std::pow(err, expo) / opts_.safety;
            fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac));
            double hnew = h / fac;
            if (err <= 1.0) {
                ++accepted_;
                t = last ? t_end : t + h;
                y.swap(ynew_);
                rhs_(t, y, k1_);
                ++evaluations_;
                if (reject_)
                    hnew = std::min(hnew, h);
                reject_ = false;
                // Keep the controller's suggestion when the step was clipped
                // to land on t_end.
                h_ = last ? std::max(hnew, h_) : hnew;
                return StepOutcome::Accepted;
            }
            h_ = h / std::min(1.0 / fac1, std::pow(err, expo) / opts_.safety);
            reject_ = true;
            ++rejected_;
        }
    }

private:
    void stages(double t, const Eigen::VectorXd& y, double h)
    {
        using namespace dop853_tableau;
        ytmp_ = y + h * a21 * k1_;
        rhs_(t + c2 * h, ytmp_, k2_);
        ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
        rhs_(t + c3 * h, ytmp_, k3_);
        ytmp_ = y + h * (a41 * k1_ + a43 * k3_);
        rhs_(t + c4 * h, ytmp_, k4_);
        ytmp_ = y + h * (a51 * k1_ + a53 * k3_ + a54 * k4_);
        rhs_(t + c5 * h, ytmp_, k5_);
        ytmp_ = y + h * (a61 * k1_ + a64 * k4_ + a65 * k5_);
        rhs_(t + c6 * h, ytmp_, k6_);
        ytmp_ = y + h * (a71 * k1_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
        rhs_(t + c7 * h, ytmp_, k7_);
        ytmp_ = y + h * (a81 * k1_ + a84 * k4_ + a85 * k5_ + a86 * k6_ + a87 * k7_);
        rhs_(t + c8 * h, ytmp_, k8_);
        ytmp_ = y + h * (a91 * k1_ + a94 * k4_ + a95 * k5_ + a96 * k6_ + a97 * k7_ + a98 * k8_);
        rhs_(t + c9 * h, ytmp_, k9_);
        ytmp_ = y + h * (a101 * k1_ + a104 * k4_ + a105 * k5_ + a106 * k6_ + a107 * k7_ + a108 * k8_
                         + a109 * k9_);
        rhs_(t + c10 * h, ytmp_, k10_);
        ytmp_ = y + h * (a111 * k1_ + a114 * k4_ + a115 * k5_ + a116 * k6_ + a117 * k7_ + a118 * k8_
                         + a119 * k9_ + a1110 * k10_);
        rhs_(t + c11 * h, ytmp_, k2_);
        ytmp_ = y + h * (a121 * k1_ + a124 * k4_ + a125 * k5_ + a126 * k6_ + a127 * k7_ + a128 * k8_
                         + a129 * k9_ + a1210 * k10_ + a1211 * k2_);
        rhs_(t + h, ytmp_, k3_);
        evaluations_ += 11;
        // k4 now holds the order-8 increment, reused by the error estimate.
        k4_ = b1 * k1_ + b6 * k6_ + b7 * k7_ + b8 * k8_ + b9 * k9_ + b10 * k10_ + b11 * k2_ + b12 * k3_;
        ynew_ = y + h * k4_;
    }

    double error_norm(const Eigen::VectorXd& y, double h) const
    {
        using namespace dop853_tableau;
        double err = 0.0, err2 = 0.0;
        const Eigen::Index n = y.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
            double e = (k4_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k3_[i]) / sk;
            err2 += e * e;
            e = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] + er10 * k10_[i]
                 + er11 * k2_[i] + er12 * k3_[i])
                / sk;
            err += e * e;
        }
        double deno = err + 0.01 * err2;
        if (deno <= 0.0)
            deno = 1.0;
        return std::abs(h) * err * std::sqrt(1.0 / (static_cast<double>(n) * deno));
    }

    Rhs rhs_;
    AdaptiveOptions opts_;
    double h_;
    bool have_k1_ = false;
    bool reject_ = false;
    std::size_t accepted_ = 0, rejected_ = 0, evaluations_ = 0;
    Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, ytmp_, ynew_;
};

template <class Rhs>
Dop853(Rhs, Eigen::Index, AdaptiveOptions) -> Dop853<Rhs>;

} // namespace fput

#endif // FPUT_DOP853_HPP
