pub mod optima;
