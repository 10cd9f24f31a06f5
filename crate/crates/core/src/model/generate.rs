//! Seeded synthetic instances.
//!
//! Each depot sits at a hub station with a few line corridors. Trips are laid
//! out as shuttle rotations (hub to outer station and back) so that a
//! depot-closed plan exists by construction: every rotation starts with a
//! depot dispatch, every turnaround lies in `[delta_min, delta_max]`, and every
//! rotation ends either back at the hub or at a dead-end station nobody
//! departs from. A share of couplable rotations carries demand that only a
//! coupled pair can serve.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Depot, DriverWindow, EmuType, Instance, InstanceError, Meta, Tolerances, Trip};
use crate::num::{serde_decimal, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub trips: usize,
    /// How many of the trips admit coupled pairs.
    pub coupled_trips: usize,
    pub depots: usize,
    pub emu_types: usize,
    pub corridors_per_depot: usize,
    pub delta_min: u32,
    pub delta_max: u32,
    /// Inclusive trip count range of one planned rotation.
    pub rotation_length: (usize, usize),
    pub passengers: (u32, u32),
    pub bicycles: (u32, u32),
    /// Probability that a couplable rotation carries coupled-only demand.
    pub peak_fraction: f64,
    /// Probability that a non-designated type is also admitted on a trip.
    pub extra_type_probability: f64,
    /// Extra units above the planned need in each depot range.
    pub spare_units: u32,
    #[serde(with = "serde_decimal")]
    pub alpha: Rational,
    pub tolerances: Tolerances,
    pub first_departure: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            trips: 30,
            coupled_trips: 0,
            depots: 1,
            emu_types: 1,
            corridors_per_depot: 2,
            delta_min: 5,
            delta_max: 60,
            rotation_length: (4, 8),
            passengers: (20, 120),
            bicycles: (0, 8),
            peak_fraction: 0.5,
            extra_type_probability: 0.4,
            spare_units: 1,
            alpha: Rational::new(1, 100),
            tolerances: Tolerances {
                seat_single: 10,
                seat_coupled: 20,
                bike_single: 2,
                bike_coupled: 4,
            },
            first_departure: 300,
        }
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<(), InstanceError> {
        let fail = |m: &str| Err(InstanceError::Generator(m.to_string()));
        if self.trips == 0 {
            return fail("at least one trip is required");
        }
        if self.coupled_trips > self.trips {
            return fail("coupled_trips exceeds trips");
        }
        if self.depots == 0 || self.emu_types == 0 || self.corridors_per_depot == 0 {
            return fail("depots, emu_types and corridors_per_depot must be positive");
        }
        if self.delta_min > self.delta_max {
            return fail("delta_min exceeds delta_max");
        }
        let (lo, hi) = self.rotation_length;
        if lo == 0 || lo > hi {
            return fail("rotation_length must be a nonempty positive range");
        }
        if self.passengers.0 > self.passengers.1 || self.bicycles.0 > self.bicycles.1 {
            return fail("demand ranges must be ordered");
        }
        if !(0.0..=1.0).contains(&self.peak_fraction)
            || !(0.0..=1.0).contains(&self.extra_type_probability)
        {
            return fail("probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

struct Corridor {
    outer: String,
    line: String,
    minutes: u32,
    km: i128,
}

struct Rotation {
    coupled: bool,
    peak: bool,
    depot: usize,
    corridor: usize,
    emu_type: usize,
    len: usize,
}

/// Builds a valid, feasible-by-construction instance; identical seeds give identical output.
pub fn generate_synthetic(params: &GeneratorConfig, seed: u64) -> Result<Instance, InstanceError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seat_choices = [70u32, 90, 110, 130, 160];

    let mut emu_types: Vec<EmuType> = (0..params.emu_types)
        .map(|r| EmuType {
            id: format!("r{}", r + 1),
            seats: seat_choices[rng.gen_range(0..seat_choices.len())],
            bike_slots: rng.gen_range(4..=12),
            cost_per_km: Rational::from_integer(rng.gen_range(5..=15)),
            couplable: rng.gen_bool(0.5),
        })
        .collect();
    if params.coupled_trips > 0 {
        emu_types[0].couplable = true;
    }
    let couplable_types: Vec<usize> = (0..emu_types.len())
        .filter(|&r| emu_types[r].couplable)
        .collect();

    let corridors: Vec<Vec<Corridor>> = (0..params.depots)
        .map(|d| {
            (0..params.corridors_per_depot)
                .map(|c| Corridor {
                    outer: format!("S{}{}", d + 1, (b'a' + (c % 26) as u8) as char),
                    line: format!("L{}{}", d + 1, c + 1),
                    minutes: rng.gen_range(20..=50),
                    km: rng.gen_range(10..=60),
                })
                .collect()
        })
        .collect();

    let mut rotations = Vec::new();
    for (coupled, mut remaining) in [
        (true, params.coupled_trips),
        (false, params.trips - params.coupled_trips),
    ] {
        while remaining > 0 {
            let len = rng
                .gen_range(params.rotation_length.0..=params.rotation_length.1)
                .min(remaining);
            remaining -= len;
            let depot = rotations.len() % params.depots;
            let emu_type = if coupled {
                couplable_types[rng.gen_range(0..couplable_types.len())]
            } else {
                rng.gen_range(0..emu_types.len())
            };
            rotations.push(Rotation {
                coupled,
                peak: coupled && rng.gen_bool(params.peak_fraction),
                depot,
                corridor: rng.gen_range(0..params.corridors_per_depot),
                emu_type,
                len,
            });
        }
    }

    let hub = |d: usize| format!("H{}", d + 1);
    let tol = params.tolerances;
    // (depart, rotation, trip) so that ids follow departure order
    let mut planned: Vec<(u32, usize, Trip)> = Vec::with_capacity(params.trips);
    let mut dispatched: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut returned: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut busy: Vec<(usize, u32, u32, u32)> = Vec::new();

    for (ri, rot) in rotations.iter().enumerate() {
        let units: u32 = if rot.peak { 2 } else { 1 };
        *dispatched.entry((rot.depot, rot.emu_type)).or_default() += units;
        let corridor = &corridors[rot.depot][rot.corridor];
        let ty = &emu_types[rot.emu_type];
        let mut clock = params.first_departure + rng.gen_range(0..=180);
        for step in 0..rot.len {
            let outbound = step % 2 == 0;
            let last = step + 1 == rot.len;
            let (origin, destination, km, minutes) = if outbound && last {
                (
                    hub(rot.depot),
                    format!("X{}", ri + 1),
                    corridor.km,
                    corridor.minutes,
                )
            } else if outbound {
                (
                    hub(rot.depot),
                    corridor.outer.clone(),
                    corridor.km,
                    corridor.minutes,
                )
            } else {
                (
                    corridor.outer.clone(),
                    hub(rot.depot),
                    corridor.km,
                    corridor.minutes,
                )
            };
            let (passengers, bicycles) = if rot.peak {
                let lo = ty.seats + tol.seat_single + 1;
                let blo = ty.bike_slots + tol.bike_single + 1;
                (
                    rng.gen_range(lo.min(2 * ty.seats)..=2 * ty.seats),
                    rng.gen_range(blo.min(2 * ty.bike_slots)..=2 * ty.bike_slots),
                )
            } else {
                let cap = ty.seats + tol.seat_single;
                let bcap = ty.bike_slots + tol.bike_single;
                (
                    rng.gen_range(params.passengers.0.min(cap)..=params.passengers.1.min(cap)),
                    rng.gen_range(params.bicycles.0.min(bcap)..=params.bicycles.1.min(bcap)),
                )
            };
            let mut allowed = vec![ty.id.clone()];
            for (r, other) in emu_types.iter().enumerate() {
                if r != rot.emu_type && rng.gen_bool(params.extra_type_probability) {
                    allowed.push(other.id.clone());
                }
            }
            allowed.sort_by_key(|id| emu_types.iter().position(|t| &t.id == id));
            let depart = clock;
            let arrive = depart + minutes;
            busy.push((rot.depot, depart, arrive, units));
            planned.push((
                depart,
                ri,
                Trip {
                    id: String::new(),
                    origin,
                    destination: destination.clone(),
                    depart,
                    arrive,
                    passengers,
                    bicycles,
                    couplable: rot.coupled,
                    allowed_types: allowed,
                    distance: Rational::from_integer(km),
                    obligatory: true,
                    line: Some(corridor.line.clone()),
                    driver_depot: Some(format!("D{}", rot.depot + 1)),
                    tolerances: None,
                },
            ));
            if last && destination == hub(rot.depot) {
                *returned.entry((rot.depot, rot.emu_type)).or_default() += units;
            }
            let gap_hi = params.delta_max.min(params.delta_min + 25);
            clock = arrive + rng.gen_range(params.delta_min..=gap_hi);
        }
    }
    planned.sort_by_key(|(depart, ri, _)| (*depart, *ri));
    let trips: Vec<Trip> = planned
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut trip))| {
            trip.id = format!("T{:03}", i + 1);
            trip
        })
        .collect();

    let depots: Vec<Depot> = (0..params.depots)
        .map(|d| {
            let mut depot = Depot {
                id: format!("D{}", d + 1),
                station: hub(d),
                out_min: BTreeMap::new(),
                out_max: BTreeMap::new(),
                in_min: BTreeMap::new(),
                in_max: BTreeMap::new(),
            };
            for (r, ty) in emu_types.iter().enumerate() {
                let out = dispatched.get(&(d, r)).copied().unwrap_or(0);
                let back = returned.get(&(d, r)).copied().unwrap_or(0);
                let spare = if params.spare_units > 0 {
                    rng.gen_range(0..=params.spare_units)
                } else {
                    0
                };
                if out + spare > 0 {
                    depot.out_max.insert(ty.id.clone(), out + spare);
                }
                if back + spare > 0 {
                    depot.in_max.insert(ty.id.clone(), back + spare);
                }
            }
            depot
        })
        .collect();

    let horizon_end = busy
        .iter()
        .map(|b| b.2)
        .max()
        .unwrap_or(params.first_departure);
    let mut driver_windows = Vec::new();
    for d in 0..params.depots {
        let mut at = params.first_departure + 60;
        while at < horizon_end {
            let need: u32 = busy
                .iter()
                .filter(|(depot, dep, arr, _)| *depot == d && *dep <= at && at < *arr)
                .map(|b| b.3)
                .sum();
            driver_windows.push(DriverWindow {
                depot: format!("D{}", d + 1),
                at,
                min_drivers: 0,
                max_drivers: need + 1,
                license: None,
            });
            at += 120;
        }
    }

    Ok(Instance {
        meta: Meta {
            name: format!(
                "synthetic-T{}-C{}-D{}-R{}-s{}",
                params.trips, params.coupled_trips, params.depots, params.emu_types, seed
            ),
            description: Some("seeded shuttle-corridor instance".to_string()),
            stations: None,
        },
        alpha: params.alpha,
        delta_min: params.delta_min,
        delta_max: params.delta_max,
        tolerances: params.tolerances,
        emu_types,
        depots,
        trips,
        driver_windows,
        licenses: Vec::new(),
        driver_weighting: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_trip_single_unit_instance() {
        let cfg = GeneratorConfig {
            trips: 30,
            coupled_trips: 0,
            depots: 1,
            emu_types: 1,
            delta_max: 60,
            ..Default::default()
        };
        let inst = generate_synthetic(&cfg, 7).unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.trips.len(), 30);
        assert_eq!(inst.trip_partition(), (30, 0));
        assert_eq!(inst.depots.len(), 1);
        assert_eq!(inst.emu_types.len(), 1);
    }

    #[test]
    fn degenerate_requests_fail() {
        let zero = GeneratorConfig {
            trips: 0,
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic(&zero, 1),
            Err(InstanceError::Generator(_))
        ));
        let too_many = GeneratorConfig {
            trips: 3,
            coupled_trips: 4,
            ..Default::default()
        };
        assert!(generate_synthetic(&too_many, 1).is_err());
        let window = GeneratorConfig {
            delta_min: 70,
            delta_max: 60,
            ..Default::default()
        };
        assert!(generate_synthetic(&window, 1).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GeneratorConfig {
            trips: 25,
            coupled_trips: 9,
            depots: 2,
            emu_types: 3,
            ..Default::default()
        };
        let a = generate_synthetic(&cfg, 42).unwrap().to_json_pretty();
        let b = generate_synthetic(&cfg, 42).unwrap().to_json_pretty();
        let c = generate_synthetic(&cfg, 43).unwrap().to_json_pretty();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_reloads_identically() {
        let cfg = GeneratorConfig {
            trips: 18,
            coupled_trips: 6,
            depots: 2,
            emu_types: 2,
            ..Default::default()
        };
        let inst = generate_synthetic(&cfg, 5).unwrap();
        let back = Instance::from_json_str(&inst.to_json_pretty()).unwrap();
        assert_eq!(inst, back);
    }
}
