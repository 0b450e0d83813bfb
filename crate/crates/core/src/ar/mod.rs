//! Autoregressive forecasters.
//!
//! Point models (ARWD, ARWDY) fit a weekly mean by least squares, optionally
//! with annual Fourier terms, and an AR model on the residuals. The
//! probabilistic model swaps in cumulative dummies fitted by lasso and adds a
//! scale model for the innovations.

mod estimation;
mod point;
mod prob;

pub use estimation::{
    aic_curve, aic_select, burg, burg_path, default_p_max, lasso_hqc, lasso_path, ols_fit, yule_walker, BurgPath,
    LassoFit,
};
pub use point::{
    fit_ar_point, forecast_ar_point, ArComponent, ArPointModel, ArVariant, ANNUAL_PERIOD, FOURIER_ORDER, TRAIN_SPAN,
};
pub use prob::{build_cumulative_design, fit_ar_prob, forecast_ar_prob, standardize, ArProbModel, Standardized};
