pub mod dip;
