#pragma once

#include <optional>

#include "magnav/process_models.hpp"

namespace magnav {

// Shared tuning for the inertial filters (array-aided odometry and the
// tightly coupled SLAM system). Gravity, frame conventions and noise
// defaults live here so the systems stay consistent.
struct NavFilterConfig {
  InsParams ins;
  ImuNoise imu;

  double sigma_theta_mean = 1.0;  // uT/sqrt(s) process noise, field mean
  double sigma_theta_grad = 5.0;  // uT/m/sqrt(s) process noise, gradient
  double sigma_eta_rw = 0.0;      // global coefficient random walk

  double sigma_mag = 0.5;    // uT per axis
  double sigma_baro = 0.1;   // m
  double sigma_fix_pos = 0.005;  // m
  double sigma_fix_att = 0.005;  // rad

  int clone_interval = 20;  // K: IMU steps between odometry emissions
  int fused_period = 100;   // D: mag updates between global-model updates
  int mag_decimation = 1;   // use every k-th mag frame

  bool use_mag = true;
  bool use_baro = true;
  bool use_fix = true;

  std::optional<double> chi_sq_gate;  // absolute innovation gate, off by default
  double max_time_gap = 0.5;          // s, larger IMU gaps abort the run

  // Initial standard deviations.
  double init_pos = 1e-3;
  double init_vel = 0.05;
  double init_att_rp = 0.05;
  double init_att_yaw = 0.1;
  double init_ba = 0.05;
  double init_bg = 0.01;
  double init_theta_mean = 100.0;
  double init_theta_grad = 100.0;
};

// Tuning of the cascaded SLAM stage of the loosely coupled system.
struct LooseSlamConfig {
  double sigma_mag = 0.5;
  double sigma_baro = 0.1;
  double sigma_fix_pos = 0.005;
  double sigma_fix_att = 0.005;
  bool use_mag = true;
  bool use_baro = true;
  bool use_fix = true;
  std::optional<double> chi_sq_gate;
  double init_pos = 1e-3;
  double init_att = 0.01;
};

}  // namespace magnav
