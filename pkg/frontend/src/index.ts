export * from './types';
export * from './api';
export * from './geometry';
export * from './render';
export * from './inspect';
export * from './state';
