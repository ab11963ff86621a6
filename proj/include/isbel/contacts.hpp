#pragma once

#include <iosfwd>
#include <vector>

#include "isbel/core_model.hpp"

namespace isbel {

enum class Side { Left, Right };

// How the Gaussian transmission window is referenced.
//  SubbandEdge: the miniband offset is compared with the subband bottom, so
//               the window is independent of in-plane kinetic energy.
//  Flat:        the bare offset E0 -+ qV/2 enters the Gaussian directly.
enum class Lineup { SubbandEdge, Flat };

struct ReservoirParams {
    Side side = Side::Left;
    double E0 = 75.0;        // meV
    double mu = 50.0;        // meV
    double Gamma_amp = 2.5;  // ps^-1
    double sigma = 15.0;     // meV

    void validate() const;
};

ReservoirParams default_reservoir(const PhysicalParams& p, Side side);

struct BiasPoint {
    double V = 0.0;  // qV, meV
};

// Chemical potential of a reservoir after the symmetric bias shift.
double effective_mu(const ReservoirParams& r, BiasPoint bias);

double transmission_window(const ReservoirParams& r, const PhysicalParams& p, int j,
                           BiasPoint bias, Lineup lineup = Lineup::SubbandEdge);

double out_rate(const ReservoirParams& r, const PhysicalParams& p, int j, double eps_kin,
                BiasPoint bias, Lineup lineup = Lineup::SubbandEdge);
double in_rate(const ReservoirParams& r, const PhysicalParams& p, int j, double eps_kin,
               BiasPoint bias, Lineup lineup = Lineup::SubbandEdge);

struct RateTables {
    std::vector<double> in1, out1, in2, out2;  // ps^-1 on the kinetic-energy grid

    RateTables& operator+=(const RateTables& o);
    RateTables scaled(double s) const;
};

RateTables contact_rates(const ReservoirParams& r, const PhysicalParams& p, const Grids& g,
                         BiasPoint bias, Lineup lineup = Lineup::SubbandEdge);
RateTables total_rates(const ReservoirParams& left, const ReservoirParams& right,
                       const PhysicalParams& p, const Grids& g, BiasPoint bias,
                       Lineup lineup = Lineup::SubbandEdge);

void write_rates_csv(std::ostream& os, const Grids& g, const RateTables& t);

// Elastic tunneling through a discrete set of miniband levels. Each level is
// a band-edge energy with the same in-plane mass as the well, so the energy
// match reduces to a comparison of band edges.
struct MinibandLevel {
    double edge = 0.0;       // meV
    double coupling2 = 0.0;  // |V|^2, meV^2
    double eta = 7.5;        // Lorentzian half width, meV
};

struct MinibandSpec {
    double mu = 0.0;  // meV
    std::vector<MinibandLevel> levels;
};

enum class Direction { In, Out };

double elastic_rate(const MinibandSpec& m, const PhysicalParams& p, int j, double eps_kin,
                    Direction dir);

}  // namespace isbel
